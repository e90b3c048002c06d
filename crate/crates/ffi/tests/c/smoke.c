#include <stdio.h>
#include <string.h>
#include "opdilate.h"

static const char *IDENTITY =
    "{\"kind\":\"cpmap\",\"algebra\":[2],\"domain\":[2],\"m\":1,\"values\":["
    "[[[[[[1,0],[0,0]],[[0,0],[0,0]]]]]],"
    "[[[[[[0,0],[1,0]],[[0,0],[0,0]]]]]],"
    "[[[[[[0,0],[0,0]],[[1,0],[0,0]]]]]],"
    "[[[[[[0,0],[0,0]],[[0,0],[1,0]]]]]]]}";

int main(void) {
    OpdInstance *inst = NULL;
    OpdResult *res = NULL;
    size_t ranks[4];
    if (opd_instance_from_json(IDENTITY, strlen(IDENTITY), &inst) != OPD_STATUS_OK) {
        fprintf(stderr, "parse: %s\n", opd_last_error_message());
        return 1;
    }
    if (opd_dilate(inst, 0.0, 7, &res) != OPD_STATUS_OK || !opd_result_passed(res)) {
        fprintf(stderr, "dilate: %s\n", opd_last_error_message());
        return 1;
    }
    if (opd_result_ranks(res, ranks, 4) != 1 || ranks[0] != 2) return 1;
    char *json = opd_result_to_json(res);
    OpdStatus v = opd_verify(inst, json, strlen(json));
    opd_string_free(json);
    opd_result_free(res);
    opd_instance_free(inst);
    if (v != OPD_STATUS_OK) return 1;
    printf("ranks [%zu]\n", ranks[0]);
    return 0;
}
