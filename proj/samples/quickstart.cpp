#include <cstdio>
#include <vector>

#include "csbm/csbm.hpp"

int main() {
    using namespace csbm;
    CsbmParams params;  // N=2000, p=0.0114, q=0.0038, mu=(1, 1.5), sigma2=1

    const auto prediction = predict_depth(params, 20);
    std::printf("scenario %s, optimal depth in [%zu, %zu]\n", to_string(prediction.scenario),
                prediction.nstar_interval.lo, prediction.nstar_interval.hi);

    const std::vector<OperatorSpec> ops{OperatorSpec::random_walk(), OperatorSpec::appnp(0.1)};
    SweepOptions opts;
    opts.trials = 5;
    opts.rule = DecisionRule::PopulationMidpoint;
    const auto sweep = layerwise_sweep(params, ops, 10, opts);

    std::printf("%-18s %5s %9s %9s\n", "operator", "depth", "test_acc", "theory_z");
    const auto theory = theory_curve(params, OperatorSpec::random_walk(), 10);
    for (const auto &row : sweep.rows) {
        const bool rw = row.op.kind == OperatorKind::RandomWalk;
        std::printf("%-18s %5zu %9.4f", row.op.name().c_str(), row.depth, row.test_acc);
        if (rw)
            std::printf(" [%.3f, %.3f]", theory[row.depth].z_lower, theory[row.depth].z_upper);
        std::printf("\n");
    }
}
