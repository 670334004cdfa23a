#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <Eigen/Dense>

#include "csbm/csbm.hpp"

using namespace csbm;

namespace {

struct Outcome {
    bool passed = false;
    std::string summary;
    std::vector<std::string> notes;
};

std::string fmt(const char *f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

CsbmParams base() { return CsbmParams{}; }

Eigen::MatrixXd dense_rw(const Graph &g) {
    const auto n = static_cast<Eigen::Index>(g.num_nodes());
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < g.num_nodes(); ++i)
        for (auto j : g.neighbors(i))
            p(static_cast<Eigen::Index>(i), j) = 1.0 / static_cast<double>(g.degree(i));
    return p;
}

Eigen::MatrixXd to_eigen(const Matrix &m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            e(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(r, c);
    return e;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (double &v : m.values())
        v = rng.normal(0.0, 1.0);
    return m;
}

std::vector<SweepRow> rows_for(const std::vector<SweepRow> &rows, OperatorKind kind) {
    std::vector<SweepRow> out;
    for (const auto &r : rows)
        if (r.op.kind == kind)
            out.push_back(r);
    return out;
}

std::size_t argmax_acc(const std::vector<SweepRow> &rows) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].test_acc > rows[best].test_acc)
            best = i;
    return best;
}

double pooled_se(const SweepRow &a, const SweepRow &b) {
    return std::sqrt(a.test_acc_stderr * a.test_acc_stderr + b.test_acc_stderr * b.test_acc_stderr);
}

SweepResult sweep(const CsbmParams &p, std::vector<OperatorSpec> ops, std::size_t n_max, std::size_t trials) {
    SweepOptions o;
    o.trials = trials;
    o.rule = DecisionRule::PopulationMidpoint;
    return layerwise_sweep(p, ops, n_max, o);
}

Outcome mean_gap_decay() {
    Outcome out;
    MomentOptions mo;
    mo.paired_draw = false;
    const auto mc = monte_carlo_moments(base(), OperatorSpec::random_walk(), 8, 20, mo);
    const double geo = std::pow(mc.rows[8].gap.mean / mc.rows[0].gap.mean, 1.0 / 8.0);
    std::string ratios;
    for (std::size_t n = 1; n <= 8; ++n)
        ratios += fmt("%s%.3f", n > 1 ? " " : "", mc.rows[n].gap.mean / mc.rows[n - 1].gap.mean);
    VerifyOptions vo;
    vo.concentration.constant_C = 3.0;
    const auto r = verify(Statement::MeanGap, base(), std::nullopt, vo);
    out.passed = std::abs(geo - 0.5) <= 0.1 && r.implied_constant <= 3.0;
    out.summary = fmt("per-layer ratio (geometric mean, depths 1..8) %.3f in 0.5+-0.1; implied C %.3f <= 3.0",
                      geo, r.implied_constant);
    out.notes.push_back("consecutive ratios: " + ratios);
    return out;
}

Outcome variance_sandwich(bool full) {
    Outcome out;
    VerifyOptions vo;
    vo.trials = full ? 1000 : 100;
    vo.max_depth = 8;
    const auto r = verify(Statement::VarianceBounds, base(), std::nullopt, vo);
    out.passed = r.passed;
    out.summary = fmt("%zu trials, pooled variance inside the variance band for %.4f of (trial, depth) pairs, need >= 0.99",
                      r.trials, r.pass_fraction);
    std::string per_depth;
    double node_pf = 0.0;
    for (const auto &[k, v] : r.details) {
        if (k.rfind("pass_fraction_", 0) == 0)
            per_depth += " " + k.substr(14) + ":" + fmt("%.2f", v);
        if (k == "node_variance_pass_fraction")
            node_pf = v;
    }
    out.notes.push_back("per-depth pass fraction" + per_depth);
    out.notes.push_back(fmt("paired-draw node variance inside band: %.4f", node_pf));
    for (std::size_t n = 4; n <= 8; ++n) {
        double pooled = 0, node = 0, lo = 0, hi = 0;
        for (const auto &[k, v] : r.details) {
            const auto s = std::to_string(n);
            if (k == "pooled_var_" + s) pooled = v;
            if (k == "node_var_" + s) node = v;
            if (k == "lower_" + s) lo = v;
            if (k == "upper_" + s) hi = v;
        }
        out.notes.push_back(fmt("depth %zu: band [%.3g, %.3g], pooled %.3g, node %.3g", n, lo, hi, pooled, node));
    }
    if (!r.passed)
        out.notes.push_back("expected red: the band collapses to sigma2/N from depth 5 while the exact "
                            "node variance stays near ||d||^2/||d||_1^2 > 1/N and the pooled estimator "
                            "drops below 1/N");
    return out;
}

Outcome oversmoothing_shape() {
    Outcome out;
    const auto res = sweep(base(), {OperatorSpec::random_walk()}, 20, 5);
    const auto &rows = res.rows;
    const std::size_t peak = argmax_acc(rows);
    const auto pred = predict_depth(base(), 20);
    const double m0 = (rows[peak].test_acc - rows[0].test_acc) / pooled_se(rows[peak], rows[0]);
    const double m20 = (rows[peak].test_acc - rows[20].test_acc) / pooled_se(rows[peak], rows[20]);
    bool unimodal = true;
    for (std::size_t n = 0; n + 1 <= peak; ++n)
        unimodal &= rows[n].test_acc <= rows[n + 1].test_acc + 3 * pooled_se(rows[n], rows[n + 1]);
    for (std::size_t n = peak; n + 1 < rows.size(); ++n)
        unimodal &= rows[n + 1].test_acc <= rows[n].test_acc + 3 * pooled_se(rows[n], rows[n + 1]);
    out.passed = unimodal && m0 >= 3 && m20 >= 3 && pred.nstar_interval.contains(peak);
    out.summary = fmt("peak depth %zu (acc %.3f) in predicted n* [%zu, %zu]; peak exceeds depth 0 by %.1f SE, depth 20 by %.1f SE; unimodal %s",
                      peak, rows[peak].test_acc, pred.nstar_interval.lo, pred.nstar_interval.hi, m0, m20,
                      unimodal ? "yes" : "no");
    std::string accs;
    for (const auto &r : rows)
        accs += fmt(" %.3f", r.test_acc);
    out.notes.push_back("test accuracy by depth:" + accs);
    return out;
}

Outcome appnp_tradeoff() {
    Outcome out;
    const std::vector<OperatorSpec> ops{OperatorSpec::random_walk(), OperatorSpec::appnp(0.1)};
    const auto res = sweep(base(), ops, 20, 5);
    const auto rw = rows_for(res.rows, OperatorKind::RandomWalk);
    const auto ap = rows_for(res.rows, OperatorKind::Appnp);
    const double margin = (ap[20].test_acc - rw[20].test_acc) / pooled_se(ap[20], rw[20]);

    auto dense = base();
    dense.p_intra *= 3.0;
    const auto res3 = sweep(dense, ops, 20, 5);
    const auto rw3 = rows_for(res3.rows, OperatorKind::RandomWalk);
    const auto ap3 = rows_for(res3.rows, OperatorKind::Appnp);
    const double best_rw = rw3[argmax_acc(rw3)].test_acc, best_ap = ap3[argmax_acc(ap3)].test_acc;

    auto large = base();
    large.n_nodes = 8000;
    large.p_intra /= 4.0;
    large.q_inter /= 4.0;
    const auto res8 = sweep(large, ops, 20, 5);
    const auto rw8 = rows_for(res8.rows, OperatorKind::RandomWalk);
    const auto ap8 = rows_for(res8.rows, OperatorKind::Appnp);

    out.passed = margin >= 3 && best_rw >= best_ap;
    out.summary = fmt("depth 20: APPNP %.3f vs RW %.3f (%.1f SE); p x3 best-over-depth RW %.3f >= APPNP %.3f",
                      ap[20].test_acc, rw[20].test_acc, margin, best_rw, best_ap);
    out.notes.push_back(fmt("N=8000 (same expected degree): best RW %.3f, best APPNP %.3f",
                            rw8[argmax_acc(rw8)].test_acc, ap8[argmax_acc(ap8)].test_acc));
    return out;
}

Outcome ppr_consistency() {
    Outcome out;
    Rng rng(2024);
    double worst_identity = 0.0;
    for (int i = 0; i < 100; ++i) {
        CsbmParams p;
        p.q_inter = 0.001 + 0.1 * rng.uniform();
        p.p_intra = p.q_inter + 0.001 + 0.5 * rng.uniform();
        p.mu1 = -1.0 + rng.uniform();
        p.mu2 = p.mu1 + 0.01 + 2.0 * rng.uniform();
        const double alpha = 0.001 + 0.999 * rng.uniform();
        worst_identity = std::max(worst_identity, std::abs(appnp_mean_gap(p, alpha, 0) - (p.mu2 - p.mu1)));
    }

    double worst_appnp = 0.0;
    for (std::uint64_t t = 0; t < 4; ++t) {
        const std::size_t n = 50 * (t + 1);
        const auto g = families::random_connected(n, 0.05, t);
        const auto x = random_matrix(n, 2, t);
        const double alpha = 0.1 + 0.2 * static_cast<double>(t);
        const Eigen::MatrixXd p = dense_rw(g), xe = to_eigen(x);
        Eigen::MatrixXd series = Eigen::MatrixXd::Zero(xe.rows(), xe.cols()), power = xe;
        Propagator prop(g, x, OperatorSpec::appnp(alpha));
        for (std::size_t k = 1; k <= 15; ++k) {
            series += alpha * std::pow(1 - alpha, static_cast<double>(k - 1)) * power;
            power = p * power;
            prop.advance();
            const Eigen::MatrixXd closed = series + std::pow(1 - alpha, static_cast<double>(k)) * power;
            worst_appnp = std::max(worst_appnp, (to_eigen(prop.linear()) - closed).cwiseAbs().maxCoeff());
        }
    }

    bool ppnp_ok = true;
    double worst_excess = -1.0;
    for (std::uint64_t t = 0; t < 10; ++t) {
        const std::size_t n = 10 + 4 * t;
        const auto g = families::random_connected(n, 0.15, 100 + t);
        const auto x = random_matrix(n, 1, 100 + t);
        const double alpha = 0.1 + 0.08 * static_cast<double>(t);
        const auto r = ppnp(g, x, alpha, 30);
        const auto nn = static_cast<Eigen::Index>(n);
        const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(nn, nn) - (1 - alpha) * dense_rw(g);
        const Eigen::MatrixXd exact = alpha * a.partialPivLu().solve(to_eigen(x));
        const double err = (to_eigen(r.matrix) - exact).cwiseAbs().maxCoeff();
        const double allowed = r.tail_bound * max_abs(x);
        ppnp_ok &= err <= allowed + 1e-12;
        worst_excess = std::max(worst_excess, err - allowed);
    }
    out.passed = worst_identity <= 1e-12 && worst_appnp <= 1e-10 && ppnp_ok;
    out.summary = fmt("appnp_mean_gap(n=0) worst error %.2e; APPNP vs closed form %.2e; PPNP vs dense solve worst (error - tail bound) %.2e <= 1e-12",
                      worst_identity, worst_appnp, worst_excess);
    return out;
}

Outcome variance_limit_check() {
    Outcome out;
    const auto r = verify(Statement::VarianceLimit, base(), std::nullopt, VerifyOptions{});
    const auto reg = exact_variance_profile(families::circulant(10, 2), OperatorSpec::random_walk(), 200, 1.0);
    double worst_reg = 0.0;
    for (double v : reg.per_node)
        worst_reg = std::max(worst_reg, std::abs(v - 0.1));
    out.passed = r.worst_deviation < 1e-6 && worst_reg < 1e-9;
    out.summary = fmt("triangle-with-pendant deviation from 0.28125 at n=200: %.2e; 10-node 4-regular deviation from 0.1: %.2e",
                      r.worst_deviation, worst_reg);
    return out;
}

Outcome monotonicity() {
    Outcome out;
    const auto r = verify(Statement::SymMonotone, base(), std::nullopt, VerifyOptions{});
    const auto profs = exact_variance_profiles(families::star(3), OperatorSpec::random_walk(), 2, 1.0);
    const double c1 = profs[1].per_node[0], c2 = profs[2].per_node[0];
    const bool star_ok = std::abs(c1 - 1.0 / 3.0) < 1e-12 && std::abs(c2 - 1.0) < 1e-12;
    out.passed = r.passed && star_ok;
    out.summary = fmt("symmetric operator: %g increases over %zu graphs; star K1,3 center %.6f -> %.6f",
                      r.details[0].second, r.trials, c1, c2);
    return out;
}

Outcome relu() {
    Outcome out;
    VerifyOptions vo;
    vo.trials = 50;
    const auto r = verify(Statement::ReluNoGain, base(), std::nullopt, vo);
    const double diff = r.details[0].second, se = r.details[1].second;
    auto other = base();
    other.mu1 = -2.0;
    other.mu2 = 1.0;
    const auto r2 = verify(Statement::ReluNoGain, other, std::nullopt, vo);
    const double diff2 = r2.details[0].second, se2 = r2.details[1].second;
    out.passed = r.passed && std::abs(diff) <= 2 * se + 1e-12 && r2.passed;
    out.summary = fmt("mu=(1,1.5): relu - linear error %.4f (SE %.4f); mu=(-2,1): %.4f (SE %.4f), no significant gain",
                      diff, se, diff2, se2);
    return out;
}

Outcome structural() {
    Outcome out;
    std::size_t with_triangle = 0;
    for (std::uint64_t t = 0; t < 100; ++t)
        with_triangle += contains_triangle(sample_graph(base(), t));
    VerifyOptions vo;
    vo.trials = 100;
    const auto deg = verify(Statement::DegreeConcentration, base(), std::nullopt, vo);
    const auto nb = verify(Statement::NeighborhoodBound, base(), std::nullopt, vo);
    out.passed = with_triangle == 100 && deg.pass_fraction >= 0.99 && nb.pass_fraction >= 0.99;
    out.summary = fmt("triangles %zu/100; degree concentration pass_fraction %.4f (need 0.99); |N_1| within bound in %.0f/100",
                      with_triangle, deg.pass_fraction, nb.pass_fraction * 100);
    if (deg.pass_fraction < 0.99)
        out.notes.push_back(fmt("expected red: mean degree %.1f is %.2f log N, far below the C log N regime of the "
                                "degree concentration bound; the exact binomial fraction inside [d/2, 3d/2] is about 0.948",
                                deg.details[0].second, deg.details[2].second));
    return out;
}

std::string slurp(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    Outcome out;
    double worst = 0.0;
    for (std::uint64_t t = 0; t < 4; ++t) {
        const std::size_t n = 50 * (t + 1);
        const auto g = families::random_connected(n, 0.05, 10 + t);
        const auto x = random_matrix(n, 2, 10 + t);
        const Eigen::MatrixXd p = dense_rw(g);
        Eigen::MatrixXd h = to_eigen(x);
        Propagator prop(g, x, OperatorSpec::random_walk());
        for (int k = 0; k < 30; ++k) {
            h = p * h;
            prop.advance();
            worst = std::max(worst, (to_eigen(prop.linear()) - h).cwiseAbs().maxCoeff());
        }
    }

    const auto dir = std::filesystem::temp_directory_path() / "csbm_acceptance";
    std::filesystem::create_directories(dir);
    const std::string cfg = CONFIG_DIR;
    const std::vector<std::string> commands{
        "sweep --config " + cfg + "/sweep_base.json --trials 3",
        "theory --config " + cfg + "/reference.json",
        "predict-depth --config " + cfg + "/reference.json",
        "verify MeanGap --config " + cfg + "/reference.json",
        "verify VarianceLimit --config " + cfg + "/variance_limit.json",
        "ingest --config " + cfg + "/ingest_four_node.json"};
    std::size_t identical = 0;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        std::vector<std::string> outputs;
        for (const char *extra : {" --workers 1", " --workers 1", " --workers 3"}) {
            const auto file = dir / ("out" + std::to_string(i) + ".txt");
            const std::string cmd = std::string(CSBM_LAB_BIN) + " " + commands[i] + extra + " --out " +
                                    file.string() + " 2>/dev/null";
            const int status = std::system(cmd.c_str());
            outputs.push_back(WEXITSTATUS(status) <= 1 ? slurp(file) : std::string());
        }
        const bool same = !outputs[0].empty() && outputs[0] == outputs[1] && outputs[0] == outputs[2];
        identical += same;
        if (!same)
            out.notes.push_back("not byte-identical: " + commands[i]);
    }
    out.passed = worst <= 1e-9 && identical == commands.size();
    out.summary = fmt("sparse vs dense powers worst error %.2e; %zu/%zu CLI commands byte-identical across reruns and worker counts",
                      worst, identical, commands.size());
    return out;
}

} // namespace

int main(int argc, char **argv) {
    const bool full = argc > 1 && std::string(argv[1]) == "--full";
    struct Criterion {
        const char *name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"mean-gap decay", mean_gap_decay},
        {"variance sandwich", [full] { return variance_sandwich(full); }},
        {"oversmoothing shape and depth prediction", oversmoothing_shape},
        {"APPNP tradeoff", appnp_tradeoff},
        {"APPNP/PPNP formula consistency", ppr_consistency},
        {"variance limit", variance_limit_check},
        {"symmetric monotonicity and random-walk counterexample", monotonicity},
        {"ReLU non-improvement", relu},
        {"structural Monte Carlo", structural},
        {"oracle equivalence and determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].run();
        } catch (const std::exception &e) {
            o.summary = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %2zu %s: %s [%.1fs]\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].name,
                    o.summary.c_str(), secs);
        for (const auto &n : o.notes)
            std::printf("        %s\n", n.c_str());
        std::fflush(stdout);
        failed += !o.passed;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
