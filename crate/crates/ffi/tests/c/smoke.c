#include <math.h>
#include <stdio.h>

#include "qhyper.h"

int main(void) {
    const double d[16] = {2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0.5, 0, 0, 0};
    QhIsometry *a = NULL;
    if (qh_isometry_new(1, d, 1e-9, &a) != QH_STATUS_OK) {
        fprintf(stderr, "new: %s\n", qh_last_error());
        return 1;
    }
    QhClassification c;
    double t = 0;
    if (qh_isometry_classify(a, &c) != QH_STATUS_OK || c != QH_CLASSIFICATION_HYPERBOLIC) return 2;
    if (qh_isometry_real_trace(a, &t, 1) != QH_STATUS_OK || fabs(t + 5) > 1e-12) return 3;

    QhDecision out;
    if (qh_pair_conjugate(a, a, a, a, 1e-9, &out, NULL, 0) != QH_STATUS_OK) {
        /* a pair sharing its fixed points is outside the decider */
        if (qh_last_error() == NULL) return 4;
    }
    const double bad[16] = {2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0};
    QhIsometry *b = NULL;
    if (qh_isometry_new(1, bad, 1e-9, &b) != QH_STATUS_NOT_MEMBER || b != NULL) return 5;
    qh_isometry_free(a);
    printf("ok %s\n", qh_version());
    return 0;
}
