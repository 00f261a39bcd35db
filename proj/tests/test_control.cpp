#include "momentlab/control.hpp"
#include "momentlab/cost.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <vector>

using namespace momentlab;

namespace {

ControlSignal control_for(const EigenvalueSequence& seq, const std::vector<std::complex<double>>& y0, double T,
                          std::size_t N, long bits = 512)
{
    const auto fam = biorthogonal_family_escalating(seq, T, N, {bits, 8192, 1e-20});
    return synthesize_control(fam, moments_from_initial_data(seq, y0, T, N, fam.precision_bits()));
}

} // namespace

TEST(Moments, HeatTargets)
{
    const auto prob = moments_from_initial_data(heat_sequence(5), {{1, 0}, {1, 0}}, 1.0, 5);
    EXPECT_NEAR(prob.targets[0].re.to_double(), -1.25331413731550025, 1e-15);
    EXPECT_NEAR(prob.targets[1].re.to_double(), -0.626657068657750126, 1e-15);
    EXPECT_TRUE(prob.targets[2].re.is_zero());
    EXPECT_DOUBLE_EQ(prob.weights[1], 0.25);
    EXPECT_NEAR(prob.initial_norm(), std::sqrt(1.25), 1e-15);
    EXPECT_THROW(moments_from_initial_data(heat_sequence(5), {{1, 0}}, 0.0, 5), Error);
    EXPECT_THROW(moments_from_initial_data(heat_sequence(5), {{1, 0}, {1, 0}}, 1.0, 1), Error);
}

TEST(Moments, CondensingUnitObservation)
{
    const auto prob = moments_from_initial_data(condensing_sequence(0.5, 6), {{2, 0}}, 0.5, 6);
    EXPECT_DOUBLE_EQ(prob.targets[0].re.to_double(), -2.0);
    EXPECT_DOUBLE_EQ(prob.weights[1], 1.0);
    EXPECT_DOUBLE_EQ(prob.weights[2], 0.25);
}

TEST(Moments, VanishingObservationRejected)
{
    auto spec = SystemSpec::custom({{1, 0}, {4, 0}}, {{1, 0}, {0, 0}});
    try {
        moments_from_initial_data(generate(spec, 2), {{1, 0}}, 1.0, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::VanishingObservation);
    }
}

TEST(Synthesis, SingleModeNorm)
{
    const auto v = control_for(heat_sequence(1), {{1, 0}}, 1.0, 1);
    EXPECT_NEAR(v.norm.to_double(), 0.701223699413775787, 1e-14);
    EXPECT_GT(v.derivative_norm, Real(0));
}

TEST(Synthesis, ZeroDataZeroControl)
{
    const auto v = control_for(heat_sequence(6), {}, 0.5, 6);
    EXPECT_TRUE(v.norm.is_zero());
    for (const auto& c : v.coeffs)
        EXPECT_TRUE(c.re.is_zero() && c.im.is_zero());
}

TEST(Synthesis, MomentsExact)
{
    const auto seq = heat_sequence(12);
    const double T = 0.4;
    const auto fam = biorthogonal_family(seq, T, 12);
    const auto prob = moments_from_initial_data(seq, {{1, 0}, {-0.5, 0}, {0.25, 0}}, T, 12);
    const auto v = synthesize_control(fam, prob);
    WorkingPrecision wp(512);
    for (std::size_t k = 0; k < 12; ++k) {
        const Complex want = exp(Complex(-(prob.lambda[k].re * Real(T)), Real(0))) * prob.targets[k];
        EXPECT_LT(abs(moment_of(v, prob.lambda[k]) - want), Real(1e-20));
    }
}

TEST(Synthesis, TriangleBound)
{
    // ||v|| <= sum_k e^{-Re l_k T} |m_k| ||q_k||
    const auto seq = heat_sequence(10);
    const auto fam = biorthogonal_family(seq, 0.5, 10);
    const auto prob = moments_from_initial_data(seq, {{1, 0}, {2, 0}, {-1, 0}, {0.5, 0}}, 0.5, 10);
    const auto v = synthesize_control(fam, prob);
    double bound = 0.0;
    for (std::size_t k = 0; k < 10; ++k)
        bound += std::exp(-prob.lambda[k].re.to_double() * 0.5) * abs(prob.targets[k]).to_double() *
                 std::exp(fam.log_norm(k));
    EXPECT_LE(v.norm.to_double(), bound * (1 + 1e-12));
}

TEST(Synthesis, Linearity)
{
    const auto seq = heat_sequence(8);
    const auto fam = biorthogonal_family(seq, 0.5, 8);
    const auto a = synthesize_control(fam, moments_from_initial_data(seq, {{1, 0}}, 0.5, 8));
    const auto b = synthesize_control(fam, moments_from_initial_data(seq, {{0, 0}, {1, 0}}, 0.5, 8));
    const auto ab = synthesize_control(fam, moments_from_initial_data(seq, {{2, 0}, {-3, 0}}, 0.5, 8));
    for (double t : {0.0, 0.1, 0.37, 0.5}) {
        const auto want = 2.0 * a(t) - 3.0 * b(t);
        EXPECT_NEAR(std::abs(ab(t) - want), 0.0, 1e-9 * (1 + std::abs(want)));
    }
}

TEST(Synthesis, RealControls)
{
    struct Case {
        EigenvalueSequence seq;
        std::vector<std::complex<double>> y0;
    };
    std::vector<Case> cases = {
        {heat_sequence(10), {{1, 0}, {0.3, 0}}},
        {phase_field_sequence({}, 5), {{1, 0}, {0, 0}, {0.5, 0}}},
        {condensing_sequence(0.5, 10), {{1, 0}, {-1, 0}}},
        // Conjugate partner data on the complex spectrum.
        {complex2x2_sequence(10), {{1, 0.5}, {1, -0.5}, {0.2, 0.1}, {0.2, -0.1}}},
    };
    for (const auto& c : cases) {
        const auto v = control_for(c.seq, c.y0, 0.5, 10);
        EXPECT_LE(v.max_imaginary(), 1e-10 * v.norm.to_double()) << to_string(c.seq.source.kind);
    }
}

TEST(Synthesis, MismatchedInputsRejected)
{
    const auto seq = heat_sequence(6);
    const auto fam = biorthogonal_family(seq, 0.5, 6);
    EXPECT_THROW(synthesize_control(fam, moments_from_initial_data(seq, {{1, 0}}, 0.5, 5)), Error);
    EXPECT_THROW(synthesize_control(fam, moments_from_initial_data(seq, {{1, 0}}, 0.6, 6)), Error);
}

TEST(Verify, FreeDecayWithoutControl)
{
    const auto seq = heat_sequence(6);
    const auto fam = biorthogonal_family(seq, 0.5, 3);
    auto v = synthesize_control(fam, moments_from_initial_data(seq, {}, 0.5, 3));
    const auto full = moments_from_initial_data(seq, {{1, 0}, {1, 0}}, 0.5, 6);
    const auto rep = verify_null_control(full, v);
    EXPECT_NEAR(rep.residuals[0], std::exp(-0.5), 1e-15);
    EXPECT_NEAR(rep.residuals[1], std::exp(-2.0), 1e-15);
    EXPECT_EQ(rep.residuals[4], 0.0);
}

TEST(Verify, HeatNullControl)
{
    const auto seq = heat_sequence(50);
    const auto v = control_for(seq, {{1, 0}}, 1.0, 25);
    const auto full = moments_from_initial_data(seq, {{1, 0}}, 1.0, 50, v.precision_bits);
    const auto rep = verify_null_control(full, v);
    EXPECT_EQ(rep.controlled, 25u);
    ASSERT_EQ(rep.residuals.size(), 50u);
    EXPECT_LE(rep.max_controlled, 1e-12 * rep.initial_norm);
    EXPECT_TRUE(rep.spillover_decays());
    for (std::size_t k = 25; k < 50; ++k)
        EXPECT_LE(rep.residuals[k], rep.envelope[k] * (1 + 1e-9));
}

TEST(Verify, EnvelopeBoundsEveryMode)
{
    // The envelope is a bound for controlled and uncontrolled modes alike.
    const auto seq = condensing_sequence(0.75, 40);
    const auto v = control_for(seq, {{1, 0}, {0.5, 0}}, 0.4, 16);
    const auto full = moments_from_initial_data(seq, {{1, 0}, {0.5, 0}}, 0.4, 40, v.precision_bits);
    const auto rep = verify_null_control(full, v);
    for (std::size_t k = 0; k < 40; ++k)
        EXPECT_LE(rep.residuals[k], rep.envelope[k] * (1 + 1e-9)) << k;
}

TEST(Verify, ControlNormBelowCost)
{
    const auto seq = heat_sequence(12);
    const double T = 0.3;
    const std::vector<std::complex<double>> y0{{1, 0}, {-2, 0}, {0.5, 0}};
    const auto v = control_for(seq, y0, T, 12);
    const auto prob = moments_from_initial_data(seq, y0, T, 12);
    const double K = std::exp(control_cost(seq, T, 12).log_cost);
    EXPECT_LE(v.norm.to_double(), K * prob.initial_norm() * (1 + 1e-9));
}
