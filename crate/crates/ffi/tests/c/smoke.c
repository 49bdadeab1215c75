#include <math.h>
#include <stdio.h>
#include <string.h>

#include "aoisched.h"

static const char *SCENARIO =
    "variant = \"latency_weighted\"\n"
    "[[ue]]\nid = 1\nclass = \"aoi\"\nq = 0.9\np = 0.7\nrho = 1.0\n"
    "[[ue]]\nid = 2\nclass = \"latency\"\nq = 0.2\np = 0.8\nrho = 1.0\n"
    "[[ue]]\nid = 3\nclass = \"throughput\"\nalpha = 0.2\np = 0.9\n";

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,    \
                    aoisched_last_error());                           \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    AoischedScenario *scenario = NULL;
    CHECK(aoisched_scenario_from_str(SCENARIO, &scenario) == AOISCHED_STATUS_OK);
    CHECK(aoisched_scenario_ue_count(scenario) == 3);

    AoischedFeasibility feas;
    CHECK(aoisched_scenario_validate(scenario, &feas) == AOISCHED_STATUS_OK);
    CHECK(feas.feasible && fabs(feas.load - 0.4722222) < 1e-6);
    CHECK(feas.randomized_feasible == -1 && isnan(feas.theta_sum));

    double t_star = 0;
    uint64_t threshold = 0;
    CHECK(aoisched_tstar(scenario, 1, &t_star, &threshold) == AOISCHED_STATUS_OK);
    CHECK(fabs(t_star - 2.7068) < 1e-4 && threshold == 2);
    CHECK(aoisched_tstar(scenario, 2, &t_star, &threshold) == AOISCHED_STATUS_OUT_OF_RANGE);

    AoischedRunOptions opts = aoisched_run_options_default();
    opts.horizon = 20000;
    opts.seed = 7;
    AoischedReport *report = NULL;
    CHECK(aoisched_run(scenario, &opts, &report) == AOISCHED_STATUS_OK);
    CHECK(aoisched_report_ue_count(report) == 3);

    AoischedUeMetrics m;
    CHECK(aoisched_report_ue(report, 2, &m) == AOISCHED_STATUS_OK);
    CHECK(m.ue_id == 3 && m.class_ == AOISCHED_CLASS_THROUGHPUT);
    CHECK(isnan(m.avg_latency) && m.throughput > 0.15);
    CHECK(aoisched_report_ue(report, 3, &m) == AOISCHED_STATUS_OUT_OF_RANGE);

    AoischedCost cost;
    CHECK(aoisched_report_cost(report, &cost) == AOISCHED_STATUS_OK);
    CHECK(cost.cost_objective > 0);

    char *csv = NULL;
    CHECK(aoisched_report_to_csv(report, &csv) == AOISCHED_STATUS_OK);
    CHECK(strncmp(csv, "run_id,policy,seed", 18) == 0);
    aoisched_string_free(csv);
    aoisched_report_free(report);

    AoischedScenario *bad = NULL;
    CHECK(aoisched_scenario_from_str("variant = \"latency_weighted\"\n[[ue]]\nid = 1\nclass = \"aoi\"\nq = 1.5\np = 0.5\nrho = 1.0\n", &bad)
          == AOISCHED_STATUS_INVALID_SCENARIO);
    CHECK(bad == NULL && strstr(aoisched_last_error(), "q") != NULL);

    aoisched_scenario_free(scenario);
    printf("ok %s\n", aoisched_version());
    return 0;
}
