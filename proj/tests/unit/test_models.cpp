#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "phflow/models.hpp"
#include "phflow/rng.hpp"

using namespace phflow;

namespace {

Eigen::MatrixXd random_orthogonal(int d, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd G(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) G(i, j) = rng.gaussian();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
    return Q;
}

} // namespace

TEST_CASE("constant curvature model is -a^2 Id on the fiber") {
    const CurvatureModel m = constant_curvature_model(1.5, 4);
    REQUIRE(m.fiber_dim() == 3);
    REQUIRE(m.constant_in_t);
    REQUIRE(m.lipschitz == 0.0);
    const Eigen::MatrixXd K = m(3.7);
    REQUIRE(K.rows() == 3);
    REQUIRE((K + 2.25 * Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
    REQUIRE_THROWS_AS(constant_curvature_model(0.0, 4), parameter_error);
    REQUIRE_THROWS_AS(constant_curvature_model(1.0, 2), parameter_error);
}

TEST_CASE("rank-one model carries eigenvalues -4a^2 and -a^2") {
    const CurvatureModel m = rank_one_symmetric_model(1.0, 4, 2);
    const Eigen::MatrixXd K = m(0.0);
    REQUIRE(K.isApprox(Eigen::Vector3d(-4.0, -4.0, -1.0).asDiagonal().toDenseMatrix()));
    const CurvatureModel ms = rank_one_symmetric_model(0.5, 3, 1);
    const Eigen::MatrixXd Ks = ms(0.0);
    REQUIRE(Ks(0, 0) == -1.0);
    REQUIRE(Ks(1, 1) == -0.25);
    REQUIRE_THROWS_AS(rank_one_symmetric_model(1.0, 4, 3), parameter_error);
    REQUIRE_THROWS_AS(rank_one_symmetric_model(1.0, 4, 0), parameter_error);
}

TEST_CASE("eigen_split on exact diagonals is exact") {
    const Eigen::MatrixXd K =
        Eigen::Vector3d(-4.0, -4.0, -1.0).asDiagonal().toDenseMatrix();
    const EigenSplit es = eigen_split(K, 2);
    REQUIRE(es.eigenvalues[0] == -4.0);
    REQUIRE(es.eigenvalues[1] == -4.0);
    REQUIRE(es.eigenvalues[2] == -1.0);
    REQUIRE(es.gap == 3.0);
    // exact coordinate basis, A on the two strongest directions
    REQUIRE(es.split.basis_A.col(0) == Eigen::Vector3d::Unit(0));
    REQUIRE(es.split.basis_A.col(1) == Eigen::Vector3d::Unit(1));
    REQUIRE(es.split.basis_B.col(0) == Eigen::Vector3d::Unit(2));
}

TEST_CASE("eigen_split sorts a permuted diagonal stably") {
    const Eigen::MatrixXd K =
        Eigen::Vector3d(-1.0, -4.0, -4.0).asDiagonal().toDenseMatrix();
    const EigenSplit es = eigen_split(K, 2);
    REQUIRE(es.eigenvalues[0] == -4.0);
    REQUIRE(es.eigenvalues[2] == -1.0);
    REQUIRE(es.split.basis_A.col(0) == Eigen::Vector3d::Unit(1));
    REQUIRE(es.split.basis_A.col(1) == Eigen::Vector3d::Unit(2));
    REQUIRE(es.split.basis_B.col(0) == Eigen::Vector3d::Unit(0));
}

TEST_CASE("eigen_split handles dense symmetric operators") {
    const Eigen::MatrixXd D =
        Eigen::Vector4d(-9.0, -4.0, -1.0, -0.25).asDiagonal().toDenseMatrix();
    const Eigen::MatrixXd Q = random_orthogonal(4, 11);
    const Eigen::MatrixXd K = Q * D * Q.transpose();
    const EigenSplit es = eigen_split(K, 2);
    REQUIRE(es.eigenvalues[0] == Catch::Approx(-9.0).margin(1e-12));
    REQUIRE(es.eigenvalues[1] == Catch::Approx(-4.0).margin(1e-12));
    REQUIRE(es.gap == Catch::Approx(3.0).margin(1e-10));
    // orthonormality of the returned bases
    const Eigen::MatrixXd A = es.split.basis_A, B = es.split.basis_B;
    REQUIRE((A.transpose() * A - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
    REQUIRE((B.transpose() * B - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
    REQUIRE((A.transpose() * B).norm() < 1e-12);
    // A really spans the strongest eigenspace: K restricted to A has spectrum {-9,-4}
    const Eigen::MatrixXd KA = A.transpose() * K * A;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s(KA);
    REQUIRE(s.eigenvalues()[0] == Catch::Approx(-9.0).margin(1e-10));
    REQUIRE(s.eigenvalues()[1] == Catch::Approx(-4.0).margin(1e-10));
}

TEST_CASE("eigen_split validates its inputs") {
    const Eigen::MatrixXd K =
        Eigen::Vector3d(-4.0, -4.0, -1.0).asDiagonal().toDenseMatrix();
    REQUIRE_THROWS_AS(eigen_split(K, 0), parameter_error);
    REQUIRE_THROWS_AS(eigen_split(K, 3), parameter_error);
    Eigen::MatrixXd bad = K;
    bad(0, 1) = 0.5; // asymmetric
    REQUIRE_THROWS_AS(eigen_split(bad, 1), contract_violation);
}

TEST_CASE("degenerate split and aprime attachment") {
    const SplitSpec s = degenerate_split(3);
    REQUIRE(s.r == 3);
    REQUIRE(s.dim_B() == 0);
    REQUIRE(s.basis_A == Eigen::MatrixXd::Identity(3, 3));

    const Eigen::MatrixXd K =
        Eigen::Vector3d(-4.0, -4.0, -1.0).asDiagonal().toDenseMatrix();
    const EigenSplit es = eigen_split(K, 2);
    Eigen::MatrixXd D(2, 1);
    D << 0.1, -0.2;
    const SplitSpec with = with_aprime(es.split, D);
    REQUIRE(with.aprime == D);
}

TEST_CASE("higher-rank family: eigenvalues from roots plus flat zeros") {
    std::vector<RootDatum> roots = {{Eigen::Vector2d(1.0, 0.0), 1},
                                    {Eigen::Vector2d(0.0, 1.0), 1}};
    auto [path, smax] = great_circle_path(Eigen::Vector2d(1.0, 0.0),
                                          Eigen::Vector2d(0.0, 1.0));
    REQUIRE(smax == Catch::Approx(M_PI / 2).margin(1e-15));
    const HigherRankFamily fam = higher_rank_model(roots, 2, path, smax);
    REQUIRE(fam.dim_n == 4); // 1 + (1+1) + (rank-1)

    const Eigen::VectorXd ev0 = fam.eigenvalues_at(0.0);
    REQUIRE(ev0[0] == -1.0); // alpha_1(X)^2 with X = (1,0)
    REQUIRE(ev0[1] == 0.0);  // alpha_2(X) = 0
    REQUIRE(ev0[2] == 0.0);  // flat direction

    const double s = 0.3;
    const Eigen::VectorXd ev = fam.eigenvalues_at(s);
    REQUIRE(ev[0] == Catch::Approx(-std::cos(s) * std::cos(s)).margin(1e-15));
    REQUIRE(ev[1] == Catch::Approx(-std::sin(s) * std::sin(s)).margin(1e-15));

    const CurvatureModel m = fam.at(s);
    REQUIRE(m.fiber_dim() == 3);
    REQUIRE(m(0.0).isApprox(ev.asDiagonal().toDenseMatrix()));
}

TEST_CASE("higher-rank family validates roots and directions") {
    std::vector<RootDatum> roots = {{Eigen::Vector2d(1.0, 0.0), 1}};
    auto id_path = [](double) { return Eigen::Vector2d(1.0, 0.0).eval(); };
    REQUIRE_THROWS_AS(higher_rank_model(roots, 1, id_path, 1.0), parameter_error);
    REQUIRE_THROWS_AS(higher_rank_model({}, 2, id_path, 1.0), parameter_error);
    REQUIRE_THROWS_AS(
        higher_rank_model({{Eigen::Vector3d(1, 0, 0), 1}}, 2, id_path, 1.0),
        parameter_error);
    REQUIRE_THROWS_AS(
        higher_rank_model({{Eigen::Vector2d(0, 0), 1}}, 2, id_path, 1.0),
        parameter_error);
    REQUIRE_THROWS_AS(
        higher_rank_model({{Eigen::Vector2d(1, 0), 0}}, 2, id_path, 1.0),
        parameter_error);

    const HigherRankFamily fam = higher_rank_model(roots, 2, id_path, 1.0);
    auto bad = fam;
    bad.path = [](double) { return (2.0 * Eigen::Vector2d(1.0, 0.0)).eval(); };
    REQUIRE_THROWS_AS(bad.eigenvalues_at(0.0), parameter_error);
}

TEST_CASE("great-circle path stays unit and hits both endpoints") {
    auto [path, angle] = great_circle_path(Eigen::Vector2d(2.0, 0.0),
                                           Eigen::Vector2d(1.0, 1.0));
    REQUIRE(angle == Catch::Approx(M_PI / 4).margin(1e-15));
    REQUIRE((path(0.0) - Eigen::Vector2d(1.0, 0.0)).norm() < 1e-15);
    REQUIRE((path(angle) - Eigen::Vector2d(1.0, 1.0).normalized()).norm() < 1e-15);
    for (double s = 0.0; s <= angle; s += 0.1)
        REQUIRE(path(s).norm() == Catch::Approx(1.0).margin(1e-14));
    REQUIRE_THROWS_AS(great_circle_path(Eigen::Vector2d(1.0, 0.0),
                                        Eigen::Vector2d(3.0, 0.0)),
                      parameter_error);
    REQUIRE_THROWS_AS(great_circle_path(Eigen::Vector2d(0.0, 0.0),
                                        Eigen::Vector2d(1.0, 0.0)),
                      parameter_error);
}

TEST_CASE("conformal perturbation with Hess = -a^2 Id lifts -a^2 to zero") {
    const Eigen::MatrixXd K =
        Eigen::Vector3d(-4.0, -4.0, -1.0).asDiagonal().toDenseMatrix();
    const Eigen::MatrixXd hess = -Eigen::MatrixXd::Identity(4, 4);
    const Eigen::MatrixXd K1 = conformal_perturbation(K, hess);
    REQUIRE(K1(0, 0) == -3.0);
    REQUIRE(K1(1, 1) == -3.0);
    REQUIRE(K1(2, 2) == 0.0); // the -a^2 eigenvalue maps to 0 exactly
    REQUIRE(K1.isApprox(K1.transpose()));

    REQUIRE_THROWS_AS(conformal_perturbation(K, Eigen::MatrixXd::Identity(3, 3)),
                      contract_violation);
    Eigen::MatrixXd bad = hess;
    bad(0, 1) = 0.3;
    REQUIRE_THROWS_AS(conformal_perturbation(K, bad), contract_violation);
}

TEST_CASE("bump profile is a smooth compactly supported unit bump") {
    REQUIRE(bump_profile(0.0) == 1.0);
    REQUIRE(bump_profile(1.0) == 0.0);
    REQUIRE(bump_profile(-1.2) == 0.0);
    REQUIRE(bump_profile(0.5) > 0.0);
    REQUIRE(bump_profile(0.5) < 1.0);
    REQUIRE(bump_profile(0.3) > bump_profile(0.6));
    REQUIRE(bump_profile(0.4) == bump_profile(-0.4));
}

TEST_CASE("non-Anosov scenario: flattened center curvature on a periodic bump") {
    BumpSpec bump;
    bump.center = 10.0;
    bump.width = 1.0;
    bump.amplitude = 1.0;
    const CurvatureModel m = non_anosov_scenario(1.0, 4, 2, bump, 20.0);
    REQUIRE_FALSE(m.constant_in_t);
    REQUIRE(m.period == 20.0);
    REQUIRE(m.lipschitz > 0.0);

    const Eigen::MatrixXd K0 = m(0.0); // far from the bump
    REQUIRE(K0(0, 0) == -4.0);
    REQUIRE(K0(2, 2) == -1.0);
    const Eigen::MatrixXd Kc = m(10.0); // bump center: B-curvature vanishes
    REQUIRE(Kc(2, 2) == 0.0);
    REQUIRE(Kc(0, 0) == -4.0); // A-block untouched
    REQUIRE((m(10.0) - m(30.0)).norm() == 0.0); // periodicity
    REQUIRE((m(10.0) - m(-10.0)).norm() == 0.0);

    REQUIRE_THROWS_AS(non_anosov_scenario(1.0, 4, 2, bump, 1.5), parameter_error);
    BumpSpec neg = bump;
    neg.amplitude = -0.5;
    REQUIRE_THROWS_AS(non_anosov_scenario(1.0, 4, 2, neg, 20.0), parameter_error);
}

TEST_CASE("non-Anosov scenario on the distinguished orbit is constant with flat center") {
    const CurvatureModel m = non_anosov_scenario(1.0, 3, 1, BumpSpec{}, 0.0, true);
    REQUIRE(m.constant_in_t);
    const Eigen::MatrixXd K = m(5.0);
    REQUIRE(K(0, 0) == -4.0);
    REQUIRE(K(1, 1) == 0.0);
}

TEST_CASE("matrix_model wraps a fixed operator and validates symmetry") {
    Eigen::MatrixXd K(2, 2);
    K << -1.0, 0.25, 0.25, -2.0;
    const CurvatureModel m = matrix_model(K, "wrapped");
    REQUIRE(m.dim_n == 3);
    REQUIRE(m(1.0) == K);
    Eigen::MatrixXd bad = K;
    bad(0, 1) = 0.5;
    REQUIRE_THROWS_AS(matrix_model(bad, "bad"), contract_violation);
}
