#include <stdio.h>
#include <string.h>

#include "closedenv.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        CeStatus st_ = (call);                                             \
        if (st_ != CE_STATUS_OK) {                                         \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)st_,             \
                    ce_last_error() ? ce_last_error() : "");               \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    const char *data = "{\"d\": 8, \"m\": 160, \"m_prime\": 80, \"n\": 60, "
                       "\"identity_count\": 24, \"seed\": 3}";
    const char *env = "{\"grid\": {\"rf_tree_counts\": [5], \"rf_depths\": [3]}}";
    CeDataset *train = NULL, *test = NULL, *user = NULL;
    CeSanitizer *san = NULL;
    char *report = NULL;

    CHECK(ce_generate_synthetic(data, &train, &test, &user));
    CHECK(ce_sanitizer_fit(train, test, env, "{\"method\": \"linear\"}", &san));
    CHECK(ce_certify(train, test, user, san, env, &report));
    if (strstr(report, "\"privacy\"") == NULL) {
        fprintf(stderr, "report lacks privacy\n");
        return 1;
    }
    printf("%zu users, version %s\n", ce_dataset_len(user), ce_version());

    if (ce_dataset_load_csv("/no/such.csv", CE_ROLE_TEST, &test) != CE_STATUS_IO) {
        return 1;
    }

    ce_string_free(report);
    ce_sanitizer_free(san);
    ce_dataset_free(train);
    ce_dataset_free(test);
    ce_dataset_free(user);
    return 0;
}
