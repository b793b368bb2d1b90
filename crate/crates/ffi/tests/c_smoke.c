#include "domsplit.h"
#include <math.h>
#include <stdio.h>

int main(void) {
    double a[64], b[64];
    for (int i = 0; i < 64; ++i) {
        a[i] = 1.0;
        b[i] = 0.0;
    }
    DsOperator *op = NULL;
    if (ds_operator_new(0, 63, a, NULL, b, 64, DS_EXTENSION_CONSTANT, &op) != DS_OK) {
        fprintf(stderr, "%s\n", ds_last_error_message());
        return 1;
    }
    DsCertificate cert;
    if (ds_certify(op, 3.0, 0.0, &cert) != DS_OK || cert.verdict != DS_VALID || !(cert.epsilon > 0.0)) {
        return 2;
    }
    if (ds_certify(NULL, 3.0, 0.0, &cert) != DS_NULL_POINTER) {
        return 3;
    }
    ds_operator_free(op);
    printf("ok %u %.6f\n", cert.n, cert.delta_sep);
    return 0;
}
