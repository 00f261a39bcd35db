#include "momentlab/spectra.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace momentlab;

TEST(Heat, SquaresOfIntegers)
{
    const auto s = heat_sequence(3);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s.value(0), std::complex<double>(1, 0));
    EXPECT_EQ(s.value(1), std::complex<double>(4, 0));
    EXPECT_EQ(s.value(2), std::complex<double>(9, 0));
    EXPECT_EQ(s.labels[2].spatial, 3);
    EXPECT_THROW(heat_sequence(0), Error);
}

TEST(Complex2x2, ConjugatePairsMinusFirst)
{
    const auto s = complex2x2_sequence(4);
    EXPECT_EQ(s.value(0), std::complex<double>(1, -1));
    EXPECT_EQ(s.value(1), std::complex<double>(1, 1));
    EXPECT_EQ(s.value(2), std::complex<double>(4, -1));
    EXPECT_EQ(s.value(3), std::complex<double>(4, 1));
    EXPECT_NEAR(std::abs(s.value(0)), std::sqrt(2.0), 1e-15);
    EXPECT_EQ(s.labels[3].spatial, 2);
    EXPECT_EQ(s.labels[3].branch, 1);
}

TEST(PhaseField, UnitParametersClosedForm)
{
    const auto s = phase_field_sequence({}, 2);
    ASSERT_EQ(s.size(), 4u);
    EXPECT_NEAR(s.value(0).real(), 0.585786437626904951, 1e-15);
    EXPECT_NEAR(s.value(1).real(), 2.76393202250021030, 1e-15);
    EXPECT_NEAR(s.value(2).real(), 2.0 + std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(s.value(3).real(), 5.0 + std::sqrt(5.0), 1e-14);
    // Merged order interleaves the branches: (k=1,b=0), (k=2,b=0), (k=1,b=1), (k=2,b=1).
    EXPECT_EQ(s.labels[1].spatial, 2);
    EXPECT_EQ(s.labels[2].branch, 1);
    EXPECT_EQ(s.permutation, (std::vector<std::size_t>{0, 2, 1, 3}));
}

TEST(PhaseField, SortedIncreasing)
{
    const auto s = phase_field_sequence({Parameter(0.3), Parameter(2.5), Parameter(0.7)}, 40);
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
        EXPECT_LT(s.value(i).real(), s.value(i + 1).real());
}

TEST(PhaseField, CoincidenceDetected)
{
    // xi = tau = 1, rho = 2/3 makes lambda^(2)_1 == lambda^(1)_2 = 3.
    PhaseFieldParams p{Parameter(1.0), Parameter::parse("2/3"), Parameter(1.0)};
    EXPECT_THROW(
        {
            try {
                phase_field_sequence(p, 5, {true});
            } catch (const Error& e) {
                EXPECT_EQ(e.kind(), ErrorKind::CoincidentEigenvalues);
                throw;
            }
        },
        Error);
    EXPECT_THROW(phase_field_sequence(p, 5), Error);
    EXPECT_NO_THROW(phase_field_sequence({}, 30, {true}));
}

TEST(Condensing, PairsWithExponentialGap)
{
    const auto s = condensing_sequence(0.5, 4);
    EXPECT_NEAR(s.value(0).real(), 1.0, 0.0);
    EXPECT_NEAR(s.value(1).real(), 1.36787944117144232, 1e-15);
    EXPECT_NEAR(s.value(2).real(), 4.0, 0.0);
    EXPECT_NEAR(s.value(3).real(), 4.13533528323661269, 1e-15);
}

TEST(Condensing, GapResolvedAtHighModes)
{
    // e^{-100} next to 10^4 needs far more than double precision.
    const auto s = condensing_sequence(0.5, 200);
    EXPECT_GE(s.precision_bits, condensing_required_bits(0.5, 100));
    WorkingPrecision wp(s.precision_bits);
    const Real gap = s.values[199].re - s.values[198].re;
    EXPECT_NEAR(gap.log_abs(), -100.0, 1e-12);
}

TEST(Generate, DispatchAndValidation)
{
    EXPECT_EQ(generate(SystemSpec::heat(), 7).size(), 7u);
    EXPECT_EQ(generate(SystemSpec::phase(1.0, 1.0, 1.0), 7).size(), 14u);
    EXPECT_EQ(generate(SystemSpec::custom({{2, 0}, {1, 0}, {3, 1}}), 2).size(), 2u);
    EXPECT_EQ(generate(SystemSpec::custom({{2, 0}, {1, 0}}), 9).ordering, Ordering::Native);
    EXPECT_THROW(generate(SystemSpec::condensing(1.0), 4), Error);
    EXPECT_THROW(generate(SystemSpec::phase(1.0, -1.0, 1.0), 4), Error);
    EXPECT_THROW(generate(SystemSpec::custom({}), 4), Error);
    EXPECT_EQ(entries_for_spatial_modes(SystemSpec::condensing(0.5), 10), 20u);
    EXPECT_EQ(entries_for_spatial_modes(SystemSpec::heat(), 10), 10u);
}

TEST(ModalEigenpairs, MatchSequences)
{
    const auto spec = SystemSpec::phase(0.8, 1.7, 0.6);
    const auto seq = generate(spec, 20);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const auto pair = modal_eigenpairs(spec, seq.labels[i].spatial);
        const auto v = pair.values[seq.labels[i].branch];
        EXPECT_NEAR(v.re.to_double(), seq.value(i).real(), 1e-12 * std::abs(seq.value(i)));
        EXPECT_LT(pair.residual, Real(1e-100));
    }
    const auto cseq = complex2x2_sequence(20);
    for (std::size_t i = 0; i < cseq.size(); ++i) {
        const auto pair = modal_eigenpairs(SystemSpec::complex2x2(), cseq.labels[i].spatial);
        const auto v = pair.values[cseq.labels[i].branch];
        EXPECT_NEAR(v.re.to_double(), cseq.value(i).real(), 1e-12);
        EXPECT_NEAR(v.im.to_double(), cseq.value(i).imag(), 1e-12);
        const Real len = sqrt(norm2(pair.vectors[0][0]) + norm2(pair.vectors[0][1]));
        EXPECT_NEAR(len.to_double(), 1.0, 1e-15);
    }
    EXPECT_THROW(modal_eigenpairs(SystemSpec::heat(), 1), Error);
}
