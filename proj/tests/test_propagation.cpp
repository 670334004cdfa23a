#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "csbm/csbm.hpp"

using namespace csbm;

namespace {

Eigen::MatrixXd dense_rw(const Graph &g) {
    const auto n = static_cast<Eigen::Index>(g.num_nodes());
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < g.num_nodes(); ++i)
        for (auto j : g.neighbors(i))
            p(static_cast<Eigen::Index>(i), j) = 1.0 / static_cast<double>(g.degree(i));
    return p;
}

Eigen::MatrixXd dense_sym(const Graph &g) {
    const auto n = static_cast<Eigen::Index>(g.num_nodes());
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < g.num_nodes(); ++i)
        for (auto j : g.neighbors(i))
            s(static_cast<Eigen::Index>(i), j) =
                1.0 / std::sqrt(static_cast<double>(g.degree(i) * g.degree(j)));
    return s;
}

Eigen::MatrixXd to_eigen(const Matrix &m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            e(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(r, c);
    return e;
}

double max_diff(const Matrix &a, const Eigen::MatrixXd &b) {
    return (to_eigen(a) - b).cwiseAbs().maxCoeff();
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (double &v : m.values())
        v = rng.normal(0.0, 1.0);
    return m;
}

Graph small_csbm(std::size_t n, std::uint64_t trial) {
    for (std::uint64_t t = trial;; t += 1000) {
        const auto g = families::random_connected(n, 0.1, t);
        if (g.isolated_nodes().empty())
            return g;
    }
}

Matrix column(std::vector<double> v) { return Matrix::column(v); }

} // namespace

TEST(RwStep, ConstantColumnsAreFixed) {
    const auto g = families::triangle_with_pendant();
    Matrix h(4, 2);
    for (std::size_t v = 0; v < 4; ++v) {
        h(v, 0) = 3.0;
        h(v, 1) = -1.5;
    }
    EXPECT_EQ(rw_step(g, h), h);
}

TEST(RwStep, StarAveraging) {
    const auto out = rw_step(families::star(3), column({0, 1, 1, 1}));
    EXPECT_EQ(out, column({1, 0, 0, 0}));
}

TEST(RwStep, ZeroStaysZero) {
    const auto g = families::cycle(5);
    EXPECT_EQ(rw_step(g, Matrix(5, 3)), Matrix(5, 3));
}

TEST(SymStep, RegularGraphMatchesRandomWalk) {
    const auto g = families::circulant(10, 2);
    const auto h = random_matrix(10, 2, 1);
    EXPECT_LT(max_abs_diff(sym_step(g, h), rw_step(g, h)), 1e-15);
}

TEST(SymStep, SqrtDegreeIsFixed) {
    const auto g = families::triangle_with_pendant();
    std::vector<double> s;
    for (auto d : g.degrees())
        s.push_back(std::sqrt(static_cast<double>(d)));
    EXPECT_LT(max_abs_diff(sym_step(g, column(s)), column(s)), 1e-15);
}

TEST(SymStep, StarCenterIndicator) {
    const auto out = sym_step(families::star(3), column({1, 0, 0, 0}));
    const double r = 1.0 / std::sqrt(3.0);
    EXPECT_LT(max_abs_diff(out, column({0, r, r, r})), 1e-15);
}

TEST(Propagate, DepthZeroIsIdentityForEveryOperator) {
    const auto g = families::triangle_with_pendant();
    const auto x = random_matrix(4, 2, 3);
    for (auto op : {OperatorSpec::random_walk(), OperatorSpec::symmetric(), OperatorSpec::appnp(0.1)})
        EXPECT_EQ(propagate(g, x, op, 0).matrix, x);
}

TEST(Propagate, AppnpFullTeleportIsIdentity) {
    const auto g = families::triangle_with_pendant();
    const auto x = random_matrix(4, 2, 4);
    for (std::size_t n = 1; n < 5; ++n)
        EXPECT_EQ(propagate(g, x, OperatorSpec::appnp(1.0), n).matrix, x);
}

TEST(Propagate, AppnpZeroTeleportIsRandomWalk) {
    const auto g = small_csbm(30, 1);
    const auto x = random_matrix(30, 2, 5);
    for (std::size_t n = 1; n < 8; ++n)
        EXPECT_LT(max_abs_diff(propagate(g, x, OperatorSpec::appnp(0.0), n).matrix,
                               propagate(g, x, OperatorSpec::random_walk(), n).matrix),
                  1e-12);
}

TEST(AppnpStep, Definition) {
    const auto g = families::star(3);
    const auto x = column({1, 0, 0, 0});
    EXPECT_EQ(appnp_step(g, x, x, 1.0), x);
    const auto expect = axpby(0.9, rw_step(g, x), 0.1, x);
    EXPECT_LT(max_abs_diff(appnp_step(g, x, x, 0.1), expect), 1e-16);
    Matrix c(4, 1);
    for (double &v : c.values())
        v = 2.5;
    EXPECT_LT(max_abs_diff(appnp_step(g, c, c, 0.3), c), 1e-15);
}

TEST(Ppnp, FullTeleportHasNoTail) {
    const auto g = families::triangle_with_pendant();
    const auto x = random_matrix(4, 1, 6);
    const auto r = ppnp(g, x, 1.0, 7);
    EXPECT_EQ(r.matrix, x);
    EXPECT_EQ(r.tail_bound, 0.0);
}

TEST(Ppnp, TailBoundValue) {
    const auto r = ppnp(families::triangle_with_pendant(), Matrix(4, 1), 0.1, 50);
    EXPECT_NEAR(r.tail_bound, std::pow(0.9, 51), 1e-15);
    EXPECT_NEAR(r.tail_bound, 4.64e-3, 5e-5);
}

TEST(Ppnp, MatchesDenseSolveWithinTailBound) {
    for (std::uint64_t t = 0; t < 10; ++t) {
        const std::size_t n = 10 + 4 * t;
        const auto g = small_csbm(n, t);
        const auto x = random_matrix(n, 2, 100 + t);
        const double alpha = 0.1 + 0.05 * static_cast<double>(t);
        for (std::size_t k : {5u, 20u, 80u}) {
            const auto r = ppnp(g, x, alpha, k);
            const Eigen::MatrixXd p = dense_rw(g);
            const Eigen::MatrixXd a =
                Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))
                - (1.0 - alpha) * p;
            const Eigen::MatrixXd exact = alpha * a.partialPivLu().solve(to_eigen(x));
            EXPECT_LE(max_diff(r.matrix, exact), r.tail_bound * max_abs(x) + 1e-12);
        }
    }
}

TEST(Propagate, AppnpMatchesClosedForm) {
    for (std::uint64_t t = 0; t < 5; ++t) {
        const std::size_t n = 40 * (t + 1);
        const auto g = small_csbm(n, t);
        const auto x = random_matrix(n, 2, 200 + t);
        const double alpha = 0.1 * static_cast<double>(t + 1);
        const Eigen::MatrixXd p = dense_rw(g);
        const Eigen::MatrixXd xe = to_eigen(x);
        Propagator prop(g, x, OperatorSpec::appnp(alpha));
        Eigen::MatrixXd series = Eigen::MatrixXd::Zero(xe.rows(), xe.cols());
        Eigen::MatrixXd power = xe;  // P^n X
        for (std::size_t k = 1; k <= 12; ++k) {
            series += alpha * std::pow(1.0 - alpha, static_cast<double>(k - 1)) * power;
            power = p * power;
            prop.advance();
            const Eigen::MatrixXd closed = series + std::pow(1.0 - alpha, static_cast<double>(k)) * power;
            EXPECT_LT(max_diff(prop.linear(), closed), 1e-10);
        }
    }
}

TEST(Propagate, MatchesDenseMatrixPowers) {
    for (std::uint64_t t = 0; t < 4; ++t) {
        const std::size_t n = 50 * (t + 1);
        const auto g = small_csbm(n, t + 7);
        const auto x = random_matrix(n, 3, 300 + t);
        const Eigen::MatrixXd p = dense_rw(g), s = dense_sym(g);
        Eigen::MatrixXd hp = to_eigen(x), hs = to_eigen(x);
        Propagator rw(g, x, OperatorSpec::random_walk()), sym(g, x, OperatorSpec::symmetric());
        for (std::size_t k = 1; k <= 20; ++k) {
            hp = p * hp;
            hs = s * hs;
            rw.advance();
            sym.advance();
            EXPECT_LT(max_diff(rw.linear(), hp), 1e-9);
            EXPECT_LT(max_diff(sym.linear(), hs), 1e-9);
        }
    }
}

TEST(Propagate, RowStochastic) {
    const auto g = small_csbm(60, 3);
    Matrix ones(60, 1);
    for (double &v : ones.values())
        v = 1.0;
    Propagator prop(g, ones, OperatorSpec::random_walk());
    for (int k = 0; k < 30; ++k) {
        prop.advance();
        for (double v : prop.linear().values())
            EXPECT_NEAR(v, 1.0, 1e-12);
    }
}

TEST(Propagate, Linearity) {
    const auto g = small_csbm(40, 4);
    const auto x = random_matrix(40, 2, 8), y = random_matrix(40, 2, 9);
    for (auto op : {OperatorSpec::random_walk(), OperatorSpec::symmetric(), OperatorSpec::ppnp(0.2, 10)}) {
        const auto lhs = propagate(g, axpby(2.0, x, -0.5, y), op, 6).matrix;
        const auto rhs = axpby(2.0, propagate(g, x, op, 6).matrix, -0.5, propagate(g, y, op, 6).matrix);
        EXPECT_LT(max_abs_diff(lhs, rhs), 1e-10);
    }
}

TEST(Propagate, TerminalReluOnce) {
    const auto g = families::star(3);
    const auto x = column({-1, 2, -3, 0.5});
    const auto lin = propagate(g, x, OperatorSpec::random_walk(), 1).matrix;
    const auto relu = propagate(g, x, OperatorSpec::random_walk().with_relu(), 1).matrix;
    for (std::size_t v = 0; v < 4; ++v)
        EXPECT_EQ(relu(v, 0), std::max(lin(v, 0), 0.0));
}

TEST(OperatorSpec, Validation) {
    EXPECT_THROW(OperatorSpec::ppnp(0.0, 10).validate(), InvalidArgument);
    EXPECT_THROW(OperatorSpec::ppnp(0.5, 0).validate(), InvalidArgument);
    EXPECT_THROW(OperatorSpec::appnp(1.5).validate(), InvalidArgument);
    EXPECT_NO_THROW(OperatorSpec::appnp(0.0).validate());
    EXPECT_EQ(OperatorSpec::appnp(0.1).with_relu().name(), "appnp:alpha=0.1+relu");
    EXPECT_EQ(OperatorSpec::ppnp(0.1, 50).name(), "ppnp:alpha=0.1:K=50");
}

TEST(VarianceProfile, DepthZeroIsSigma2) {
    const auto prof = exact_variance_profile(families::triangle_with_pendant(),
                                             OperatorSpec::random_walk(), 0, 2.5);
    for (double v : prof.per_node)
        EXPECT_EQ(v, 2.5);
}

TEST(VarianceProfile, StarCenterRisesUnderRandomWalk) {
    const auto profs = exact_variance_profiles(families::star(3), OperatorSpec::random_walk(), 2, 1.0);
    EXPECT_NEAR(profs[1].per_node[0], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(profs[2].per_node[0], 1.0, 1e-15);
}

TEST(VarianceProfile, CycleSymmetricNonIncreasing) {
    const auto profs = exact_variance_profiles(families::cycle(4), OperatorSpec::symmetric(), 5, 1.0);
    for (std::size_t n = 1; n <= 5; ++n)
        for (std::size_t v = 0; v < 4; ++v)
            EXPECT_LE(profs[n].per_node[v], profs[n - 1].per_node[v] + 1e-12);
}

TEST(VarianceProfile, MatchesDenseRowNorms) {
    const auto g = small_csbm(70, 5);
    const Eigen::MatrixXd p = dense_rw(g);
    const auto profs = exact_variance_profiles(g, OperatorSpec::random_walk(), 6, 1.0);
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(70, 70);
    for (std::size_t n = 1; n <= 6; ++n) {
        m = p * m;
        for (std::size_t v = 0; v < 70; ++v)
            EXPECT_NEAR(profs[n].per_node[v], m.row(static_cast<Eigen::Index>(v)).squaredNorm(), 1e-12);
    }
}

TEST(VarianceProfile, RandomWalkSandwich) {
    const auto g = small_csbm(50, 6);
    for (const auto &prof : exact_variance_profiles(g, OperatorSpec::random_walk(), 15, 1.0))
        for (double v : prof.per_node) {
            EXPECT_GE(v, 1.0 / 50.0 - 1e-15);
            EXPECT_LE(v, 1.0 + 1e-15);
        }
}

TEST(VarianceProfile, WorkerCountDoesNotChangeBits) {
    const auto g = small_csbm(150, 8);
    ProfileOptions one, many;
    one.block_columns = many.block_columns = 16;
    many.workers = 4;
    const auto a = exact_variance_profiles(g, OperatorSpec::random_walk(), 10, 1.0, one);
    const auto b = exact_variance_profiles(g, OperatorSpec::random_walk(), 10, 1.0, many);
    for (std::size_t n = 0; n <= 10; ++n)
        EXPECT_EQ(a[n].per_node, b[n].per_node);
}

TEST(VarianceProfile, RefusesLargeGraphsAndNonlinearOps) {
    ProfileOptions o;
    o.max_nodes = 3;
    EXPECT_THROW(exact_variance_profile(families::triangle_with_pendant(), OperatorSpec::random_walk(), 1, 1.0, o),
                 ResourceError);
    EXPECT_THROW(exact_variance_profile(families::triangle_with_pendant(),
                                        OperatorSpec::random_walk().with_relu(), 1, 1.0),
                 InvalidArgument);
}
