#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "latwalk/error.hpp"
#include "latwalk/model_io.hpp"
#include "latwalk/walk_model.hpp"

using namespace latwalk;

namespace {

StepDistribution law(std::vector<Step> steps) { return StepDistribution(std::move(steps)); }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no latwalk::Error thrown";
  return ErrorCode::InvalidArgument;
}

/// Covariance of the embedded step law, recomputed from scratch.
Matrix2 covariance(const WalkModel& m) {
  Matrix2 c{};
  for (const auto& s : m.steps()) {
    const auto z = m.basis().embed(s.offset);
    c[0][0] += s.prob * z.real() * z.real();
    c[0][1] += s.prob * z.real() * z.imag();
    c[1][1] += s.prob * z.imag() * z.imag();
  }
  c[1][0] = c[0][1];
  return c;
}

}  // namespace

TEST(Validate, SimpleRandomWalk) {
  const auto r = validate(presets::srw().distribution());
  EXPECT_NEAR(std::abs(r.mean), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(r.sigma2, 0.5);
  EXPECT_TRUE(r.generates_lattice);
  EXPECT_TRUE(r.passes());
}

TEST(Validate, TwoPointLawIsDegenerate) {
  EXPECT_EQ(code_of([] { validate(law({{{1, 0}, 0.5}, {{-1, 0}, 0.5}})); }), ErrorCode::DegenerateSupport);
}

TEST(Validate, RangeTwoVariance) {
  const auto r = validate(presets::range2().distribution());
  EXPECT_NEAR(r.sigma2, 1.25, 1e-15);
  EXPECT_TRUE(r.generates_lattice);
}

TEST(Validate, NegativeMassRejected) {
  EXPECT_EQ(code_of([] { validate(law({{{1, 0}, 0.75}, {{-1, 0}, -0.25}, {{0, 1}, 0.5}})); }),
            ErrorCode::NonProbability);
}

TEST(Validate, EvenSublatticeDoesNotGenerate) {
  const WalkModel m({}, law({{{2, 0}, 0.25}, {{-2, 0}, 0.25}, {{0, 2}, 0.25}, {{0, -2}, 0.25}}));
  EXPECT_FALSE(m.moments().generates_lattice);
  EXPECT_EQ(m.moments().subgroup_index, 4);
  EXPECT_EQ(code_of([&] { m.require_admissible(); }), ErrorCode::GeneratesLattice);
}

TEST(Validate, ReversalPreservesAdmissibility) {
  for (const auto& m : {presets::srw(), presets::range2(), presets::skewed(), presets::skewed_normalized(),
                        presets::diagonal()}) {
    EXPECT_EQ(validate(reverse(m).distribution(), m.basis()).passes(), m.moments().passes()) << m.name();
  }
}

TEST(Normalize, IsotropicWalkIsUnchanged) {
  const auto n = normalize(presets::srw());
  EXPECT_NEAR(n.map[0][0], 1.0, 1e-12);
  EXPECT_NEAR(n.map[0][1], 0.0, 1e-12);
  EXPECT_NEAR(n.map[1][0], 0.0, 1e-12);
  EXPECT_NEAR(n.map[1][1], 1.0, 1e-12);
  EXPECT_EQ(n.model.hash(), presets::srw().hash());
}

TEST(Normalize, DiagonalCovariance) {
  // Covariance (10/9, 5/9): proportional to diag(2, 1).
  const WalkModel m({}, law({{{1, 0}, 1.0 / 9}, {{-1, 0}, 1.0 / 9}, {{2, 0}, 1.0 / 9}, {{-2, 0}, 1.0 / 9},
                             {{0, 1}, 5.0 / 18}, {{0, -1}, 5.0 / 18}}));
  const auto n = normalize(m);
  EXPECT_NEAR(n.map[0][0], 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(n.map[1][1], 1.0, 1e-12);
  EXPECT_NEAR(n.map[0][1], 0.0, 1e-12);
  EXPECT_NEAR(n.map[1][0], 0.0, 1e-12);
  EXPECT_NEAR(std::abs(n.model.basis().e1() - std::complex<double>(1.0 / std::sqrt(2.0), 0.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(n.model.basis().e2() - std::complex<double>(0.0, 1.0)), 0.0, 1e-12);
  const auto c = covariance(n.model);
  EXPECT_NEAR(c[0][0], c[1][1], 1e-12);
  EXPECT_NEAR(c[0][1], 0.0, 1e-12);
  EXPECT_TRUE(n.model.moments().isotropic);
}

TEST(Normalize, DiagonalStepsAlreadyIsotropic) {
  const auto n = normalize(presets::diagonal());
  EXPECT_NEAR(n.map[0][0], 1.0, 1e-12);
  EXPECT_NEAR(n.map[1][1], 1.0, 1e-12);
  EXPECT_NEAR(n.map[0][1], 0.0, 1e-12);
}

TEST(Normalize, Idempotent) {
  const auto once = normalize(presets::skewed());
  const auto twice = normalize(once.model);
  EXPECT_NEAR(twice.map[0][0], 1.0, 1e-12);
  EXPECT_NEAR(twice.map[1][1], 1.0, 1e-12);
  EXPECT_NEAR(twice.map[0][1], 0.0, 1e-12);
  EXPECT_NEAR(twice.map[1][0], 0.0, 1e-12);
  EXPECT_TRUE(once.model.moments().passes());
}

TEST(Reverse, SimpleRandomWalkIsSelfReversed) {
  EXPECT_EQ(reverse(presets::srw()).hash(), presets::srw().hash());
}

TEST(Reverse, SkewedWalk) {
  const auto r = reverse(presets::skewed());
  EXPECT_DOUBLE_EQ(r.pmf({-1, 0}), 0.5);
  EXPECT_DOUBLE_EQ(r.pmf({1, -1}), 0.25);
  EXPECT_DOUBLE_EQ(r.pmf({1, 1}), 0.25);
  EXPECT_DOUBLE_EQ(r.pmf({1, 0}), 0.0);
}

TEST(Reverse, MomentsNegateMeanKeepCovariance) {
  const WalkModel m({}, law({{{2, 0}, 0.25}, {{-1, 1}, 0.25}, {{0, -1}, 0.5}}));
  const auto r = reverse(m);
  EXPECT_NEAR(std::abs(r.moments().mean + m.moments().mean), 0.0, 1e-15);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(r.moments().covariance[i][j], m.moments().covariance[i][j], 1e-15);
}

TEST(WalkModel, HashDependsOnLaw) {
  EXPECT_NE(presets::srw().hash(), presets::range2().hash());
  EXPECT_EQ(presets::srw().hash(), presets::srw().hash());
}

TEST(WalkModel, HeavyTailHasFiniteMomentCertificate) {
  const auto m = presets::heavy_tail(7.5, 200, 0.5);
  EXPECT_TRUE(m.moments().passes());
  EXPECT_TRUE(m.distribution().heavy().has_value());
  EXPECT_DOUBLE_EQ(m.max_step_length(), 200.0);
}

TEST(ModelIo, ParsesPresetsAndFractions) {
  EXPECT_EQ(parse_model(R"({"kind": "srw"})").hash(), presets::srw().hash());
  const auto m = parse_model(R"({"support": [[1, 0, "1/4"], [-1, 0, "1/4"], [0, 1, 0.25], [0, -1, 0.25]]})");
  EXPECT_DOUBLE_EQ(m.sigma2(), 0.5);
}

TEST(ModelIo, ParseErrorReportsPosition) {
  try {
    parse_model("{\n  \"kind\": srw\n}");
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(ModelIo, RoundTrip) {
  const auto m = presets::skewed_normalized();
  EXPECT_EQ(parse_model(model_to_json(m)).hash(), m.hash());
}
