/// @file test_model.cpp
/// @brief Constitutive relations and theory constants.
///
/// The frozen reference values below were produced with 60-digit arbitrary
/// precision arithmetic, independently of the library code.

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <degvis/model.hpp>

using namespace degvis;

namespace {

// Independent closed forms of the coefficient functions, branch by branch.
// On the degenerate branch (mu_eps = rho^alpha):
//   f1 = (g - 2(a+1)) rho^{g-a},  f2 = (a+1) rho^{-a},  f3 = (g-(a+1)) rho^{2g-a}
// On the regularized branch (mu_eps = eps rho^{a*}):
//   f1 = (g - 2(a*+1)) rho^{g-a*}/eps, f2 = (a*+1)/(eps rho^{a*}),
//   f3 = (g-(a*+1)) rho^{2g-a*}/eps
struct OracleF {
    double f1, f2, f3;
};

OracleF oracle_coefficients(const GasModel& m, double eps, double rho) {
    const double g = m.gamma, a = m.alpha, as = m.alpha_star;
    if (std::pow(rho, a) >= eps * std::pow(rho, as)) {
        return {(g - 2.0 * (a + 1.0)) * std::pow(rho, g - a), (a + 1.0) * std::pow(rho, -a),
                (g - (a + 1.0)) * std::pow(rho, 2.0 * g - a)};
    }
    return {(g - 2.0 * (as + 1.0)) * std::pow(rho, g - as) / eps,
            (as + 1.0) / (eps * std::pow(rho, as)),
            (g - (as + 1.0)) * std::pow(rho, 2.0 * g - as) / eps};
}

constexpr double kTight = 1e-12;

} // namespace

// ============================================================================
// GasModel construction
// ============================================================================

TEST(GasModel, DerivedExponents) {
    const GasModel m = GasModel::make(2.0, 1.0);
    EXPECT_DOUBLE_EQ(m.alpha_star, 0.25); // (1/2) min(1, 1/2)
    EXPECT_DOUBLE_EQ(m.theta, 2.0 / 0.75);

    const GasModel small = GasModel::make(1.2, 0.3);
    EXPECT_DOUBLE_EQ(small.alpha_star, 0.15); // (1/2) min(0.3, 0.5)
    EXPECT_NEAR(small.theta, 1.2 / 0.15, 1e-15);

    // alpha_star always lands in (0, 1/4].
    EXPECT_DOUBLE_EQ(GasModel::make(2.4, 1.7).alpha_star, 0.25);
}

TEST(GasModel, RejectsOutOfRangeParameters) {
    EXPECT_THROW(GasModel::make(1.0, 1.0), std::domain_error);  // gamma must exceed 1
    EXPECT_THROW(GasModel::make(2.0, -0.5), std::domain_error); // alpha must be positive
    EXPECT_THROW(GasModel::make(3.0, 1.0), std::domain_error);  // gamma > alpha + 1
    EXPECT_THROW(GasModel::make(1.2, 1.5), std::domain_error);  // gamma < alpha
    EXPECT_NO_THROW(GasModel::make(2.0, 2.0));                  // gamma = alpha is admissible
    EXPECT_NO_THROW(GasModel::make(2.0, 1.0));
}

// ============================================================================
// Pressure and viscosity
// ============================================================================

TEST(Viscosity, HandEvaluatedValues) {
    const GasModel m = GasModel::make(1.5, 1.5); // alpha_star = 0.25
    EXPECT_DOUBLE_EQ(pressure(m, 4.0), 8.0);     // 4^1.5

    // eps branch active at rho = 0.01 < (0.5)^{1/1.25}:
    // mu_eps = 0.5 * 0.01^{0.25} = 0.158113883008418966...
    const GasModel m21 = GasModel::make(2.0, 1.0);
    EXPECT_NEAR(mu_eps(m21, 0.5, 0.01), 0.1581138830084189666, 0.158 * kTight);
    // and its derivative 0.5 * 0.25 * 0.01^{-0.75} = 3.952847075210474165
    EXPECT_NEAR(mu_eps_deriv(m21, 0.5, 0.01), 3.952847075210474165, 3.95 * kTight);
}

TEST(Viscosity, RegularizationDominatesAndIsBounded) {
    std::mt19937 rng(81234);
    std::uniform_real_distribution<double> alpha_dist(0.05, 2.0);
    std::uniform_real_distribution<double> eps_dist(0.01, 0.99);
    std::uniform_real_distribution<double> log_rho(-8.0, 3.0);
    for (int trial = 0; trial < 500; ++trial) {
        const double a = alpha_dist(rng);
        std::uniform_real_distribution<double> gamma_dist(std::max(a, 1.0 + 1e-9), a + 1.0);
        const GasModel m = GasModel::make(gamma_dist(rng), a);
        const double eps = eps_dist(rng);
        const double rho = std::exp(log_rho(rng));
        const double me = mu_eps(m, eps, rho);
        EXPECT_GE(me, mu(m, rho));
        EXPECT_GT(me, 0.0);
        // uniform upper bound mu_eps <= 1 + p(rho) for any eps in (0,1)
        EXPECT_LE(me, 1.0 + pressure(m, rho) + 1e-15 * (1.0 + pressure(m, rho)));
    }
}

TEST(Viscosity, DeregularizationThreshold) {
    std::mt19937 rng(5150);
    std::uniform_real_distribution<double> eps_dist(0.01, 0.99);
    std::uniform_real_distribution<double> log_rho(-6.0, 2.0);
    const GasModel m = GasModel::make(2.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const double eps = eps_dist(rng);
        const double rho = std::exp(log_rho(rng));
        const bool exact = mu_eps(m, eps, rho) == mu(m, rho);
        const bool above = rho >= deregularization_threshold(m, eps);
        EXPECT_EQ(exact, above) << "eps=" << eps << " rho=" << rho;
        EXPECT_EQ(exact, mu_branch_is_degenerate(m, eps, rho));
    }
}

TEST(Viscosity, DomainErrors) {
    const GasModel m = GasModel::make(2.0, 1.0);
    EXPECT_THROW(mu_eps(m, 0.5, -1.0), std::domain_error);
    EXPECT_THROW(mu_eps(m, 1.5, 1.0), std::domain_error); // eps outside (0,1)
    EXPECT_THROW(mu_eps(m, 0.0, 1.0), std::domain_error);
    EXPECT_THROW(pressure(m, -0.1), std::domain_error);
}

// ============================================================================
// Coefficient functions
// ============================================================================

TEST(Coefficients, MatchesIndependentClosedForms) {
    std::mt19937 rng(424242);
    std::uniform_real_distribution<double> alpha_dist(0.05, 2.2);
    std::uniform_real_distribution<double> eps_dist(0.01, 0.99);
    std::uniform_real_distribution<double> log_rho(-6.0, 6.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = alpha_dist(rng);
        std::uniform_real_distribution<double> gamma_dist(std::max(a, 1.0 + 1e-9), a + 1.0);
        const GasModel m = GasModel::make(gamma_dist(rng), a);
        const double eps = eps_dist(rng);
        const double rho = std::exp(log_rho(rng));
        const auto f = coefficients_f(m, eps, rho);
        const auto o = oracle_coefficients(m, eps, rho);
        EXPECT_NEAR(f.f1, o.f1, kTight * std::abs(o.f1) + 1e-300);
        EXPECT_NEAR(f.f2, o.f2, kTight * std::abs(o.f2) + 1e-300);
        EXPECT_NEAR(f.f3, o.f3, kTight * std::abs(o.f3) + 1e-300);
    }
}

TEST(Coefficients, HandEvaluatedSpotChecks) {
    // Degenerate branch, gamma=2, alpha=1, rho=0.5: f1 = (2-4) * 0.5 = -1.
    const GasModel m = GasModel::make(2.0, 1.0);
    const auto f = coefficients_f(m, 0.1, 0.5);
    EXPECT_NEAR(f.f1, -1.0, kTight);
    EXPECT_NEAR(f.f2, 2.0 * 2.0, kTight * 4.0);          // (a+1)/rho^a = 2/0.5
    EXPECT_NEAR(f.f3, 0.0, kTight);                      // g - (a+1) = 0

    // Regularized branch, gamma=1.2, alpha=0.5 (alpha_star=0.25), rho=0.01,
    // eps=0.5 (eps * rho^{0.25} = 0.1581... > rho^{0.5} = 0.1):
    // f2 = (1 + 0.25)/(0.5 * 0.01^{0.25}) = 7.905694150420948...
    const GasModel ms = GasModel::make(1.2, 0.5);
    const auto fs = coefficients_f(ms, 0.5, 0.01);
    EXPECT_NEAR(fs.f2, 7.90569415042094833, kTight * 7.9);
}

TEST(Coefficients, SteadyStateIdentity) {
    // f1 * (-p) - f2 * p^2 + f3 == 0 for every admissible sample: constant
    // states are steady points of the active-potential equation.
    std::mt19937 rng(777);
    std::uniform_real_distribution<double> alpha_dist(0.05, 2.4);
    std::uniform_real_distribution<double> eps_dist(0.005, 0.995);
    std::uniform_real_distribution<double> log_rho(-6.9, 6.9);
    for (int trial = 0; trial < 1000; ++trial) {
        const double a = alpha_dist(rng);
        std::uniform_real_distribution<double> gamma_dist(std::max(a, 1.0 + 1e-9), a + 1.0);
        const GasModel m = GasModel::make(gamma_dist(rng), a);
        const double eps = eps_dist(rng);
        const double rho = std::exp(log_rho(rng));
        const auto f = coefficients_f(m, eps, rho);
        const double p = pressure(m, rho);
        const double residual = f.f1 * (-p) - f.f2 * p * p + f.f3;
        const double scale =
            std::max({std::abs(f.f1 * p), std::abs(f.f2 * p * p), std::abs(f.f3)});
        EXPECT_LE(std::abs(residual), 1e-10 * (scale + 1e-300))
            << "gamma=" << m.gamma << " alpha=" << a << " eps=" << eps << " rho=" << rho;
    }
}

TEST(Coefficients, JCoefficientsAgreeWithFAtTheSamePoint) {
    // Algebraically J1 = f1 and J2 = f3 (both are the w-equation source
    // coefficients evaluated with p = rho^gamma); the two implementations
    // must agree through their different expression trees.
    std::mt19937 rng(31337);
    std::uniform_real_distribution<double> eps_dist(0.01, 0.99);
    std::uniform_real_distribution<double> log_rho(-5.0, 5.0);
    const GasModel m = GasModel::make(1.7, 0.9);
    for (int trial = 0; trial < 200; ++trial) {
        const double eps = eps_dist(rng);
        const double rho = std::exp(log_rho(rng));
        const auto f = coefficients_f(m, eps, rho);
        const auto j = j_coefficients(m, eps, rho);
        EXPECT_NEAR(j.j1, f.f1, kTight * (std::abs(f.f1) + 1e-300));
        EXPECT_NEAR(j.j2, f.f3, kTight * (std::abs(f.f3) + 1e-300));
    }
}

TEST(Coefficients, JSignsOnDegenerateBranch) {
    // Under alpha <= gamma <= alpha+1 both comparison coefficients are
    // nonpositive wherever the regularization is inert.
    std::mt19937 rng(909);
    std::uniform_real_distribution<double> alpha_dist(0.1, 2.0);
    std::uniform_real_distribution<double> log_rho(0.0, 3.0); // rho >= 1: degenerate branch
    for (int trial = 0; trial < 300; ++trial) {
        const double a = alpha_dist(rng);
        std::uniform_real_distribution<double> gamma_dist(std::max(a, 1.0 + 1e-9), a + 1.0);
        const GasModel m = GasModel::make(gamma_dist(rng), a);
        const double rho = std::exp(log_rho(rng));
        const auto j = j_coefficients(m, 0.5, rho);
        EXPECT_LE(j.j1, 0.0);
        EXPECT_LE(j.j2, 1e-300);
    }
}

TEST(VelocityGradientIdentity, InvertsTheDefinition) {
    const GasModel m = GasModel::make(2.0, 1.0);
    std::mt19937 rng(1123);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::uniform_real_distribution<double> rho_dist(0.05, 4.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double rho = rho_dist(rng), du = dist(rng), eps = 0.3;
        const double w = -pressure(m, rho) + mu_eps(m, eps, rho) * du;
        EXPECT_NEAR(velocity_gradient_identity(m, eps, rho, w), du,
                    1e-12 * (std::abs(du) + 1.0));
    }
}

// ============================================================================
// Theory constants
// ============================================================================

TEST(TheoryBounds, FrozenReferenceGammaAboveAlpha) {
    // gamma=2, alpha=1, T=1, kappa0=1 (60-digit reference values)
    const GasModel m = GasModel::make(2.0, 1.0);
    const TheoryBounds b = theory_bounds(m, 1.0, 1.0);
    EXPECT_NEAR(b.eps_gamma, 0.657236181083201715738826467333, kTight * 0.657);
    EXPECT_NEAR(b.c_gamma, 3.29744254140025629369730157563, kTight * 3.3);
    EXPECT_NEAR(b.delta_1, 0.225227795951820161972866795161, kTight * 0.225);
    EXPECT_NEAR(b.kappa_T, 0.137034309530598489046453711399, kTight * 0.137);
    EXPECT_DOUBLE_EQ(b.q_of_gamma, m.theta);
    // delta_T = min(kappa_T^{alpha-alpha_star}, delta_1) = delta_1 here
    EXPECT_NEAR(b.delta_T, b.delta_1, 1e-14 * b.delta_1);
}

TEST(TheoryBounds, FrozenReferenceGammaEqualsAlpha) {
    // gamma=alpha=1.5, T=1, kappa0=1 (60-digit reference values)
    const GasModel m = GasModel::make(1.5, 1.5);
    const TheoryBounds b = theory_bounds(m, 1.0, 1.0);
    EXPECT_DOUBLE_EQ(b.eps_gamma, 1.0);
    EXPECT_DOUBLE_EQ(b.q_of_gamma, 1.0);
    EXPECT_NEAR(b.c_gamma, 6.79570457114761308840071867838, kTight * 6.8);
    EXPECT_NEAR(b.delta_1, 7.79843057093998761112205619039e-7, kTight * 7.8e-7);
    EXPECT_NEAR(b.kappa_T, 3.11680997251756809226701829676e-5, kTight * 3.1e-5);
}

TEST(TheoryBounds, DeltaTEqualsDelta1WheneverGammaExceedsAlpha) {
    // kappa_T^{alpha-alpha_star} = delta_1 exactly when gamma > alpha, so the
    // min never selects the first argument strictly.
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> alpha_dist(0.3, 2.0);
    std::uniform_real_distribution<double> T_dist(0.1, 3.0);
    std::uniform_real_distribution<double> k_dist(0.2, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = alpha_dist(rng);
        std::uniform_real_distribution<double> gamma_dist(std::max(a + 0.05, 1.0 + 1e-6),
                                                          a + 1.0);
        const double g = gamma_dist(rng);
        if (!(g > a)) continue;
        const GasModel m = GasModel::make(g, a);
        const TheoryBounds b = theory_bounds(m, T_dist(rng), k_dist(rng));
        EXPECT_NEAR(b.delta_T, b.delta_1, 1e-13 * b.delta_1);
        EXPECT_GT(b.delta_1, 0.0);
        EXPECT_LE(b.delta_1, b.eps_gamma);
        EXPECT_GT(b.kappa_T, 0.0);
    }
}

TEST(TheoryBounds, AllFieldsPositiveAndOrdered) {
    const GasModel m = GasModel::make(1.5, 1.0);
    const TheoryBounds b = theory_bounds(m, 2.0, 0.5);
    EXPECT_GT(b.eps_gamma, 0.0);
    EXPECT_LT(b.eps_gamma, 1.0);
    EXPECT_GT(b.c_gamma, 0.0);
    EXPECT_GT(b.delta_1, 0.0);
    EXPECT_GT(b.kappa_T, 0.0);
    EXPECT_GT(b.delta_T, 0.0);
    EXPECT_LE(b.delta_T, b.delta_1);
    EXPECT_THROW(theory_bounds(m, -1.0, 1.0), std::domain_error);
    EXPECT_THROW(theory_bounds(m, 1.0, 0.0), std::domain_error);
}
