#include <gtest/gtest.h>

#include <cmath>

#include "sawspin/hamiltonian.hpp"
#include "sawspin/units.hpp"
#include "test_support.hpp"

using namespace sawspin;
using units::mhz;

namespace {

DriveParams sideband_params(double lambda) {
  DriveParams p;
  p.omega_m = mhz(15.0);
  p.g = lambda * p.omega_m;
  p.nu_1 = mhz(20.0);
  p.nu_2 = mhz(5.0);
  const double shift = p.g * p.g / p.omega_m;
  p.omega_1 = p.nu_1 - shift - p.omega_m;  // Delta_1 = omega_m
  p.omega_2 = p.nu_2 - shift;              // Delta_2 = 0
  p.Omega_1 = mhz(2.0);
  p.Omega_2 = mhz(1.0);
  return p;
}

double low_block_error(const CMatrix& a, const CMatrix& b, HilbertSpace s, int max_n) {
  return restrict_to_low_fock(a - b, s, max_n).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(LabHamiltonian, DiagonalWithoutCoupling) {
  DriveParams p;
  p.omega_m = 1.3;
  p.nu_1 = 4.0;
  p.nu_2 = 2.5;
  const HilbertSpace s(5);
  const CMatrix h = build_lab_hamiltonian(p, s).at(0.7);
  EXPECT_LT((h - CMatrix(h.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(h(s.index(Level::g1, 0), s.index(Level::g1, 0)).real(), -4.0, 1e-15);
  EXPECT_NEAR(h(s.index(Level::g2, 3), s.index(Level::g2, 3)).real(), -2.5 + 3 * 1.3, 1e-14);
}

TEST(LabHamiltonian, ExactPolaronShiftInExcitedBlock) {
  DriveParams p;
  p.omega_m = 1.0;
  p.g = 0.3;
  const int n = 40;
  const HilbertSpace s(n);
  const CMatrix h = build_lab_hamiltonian(p, s).at(0.0);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h.block(2 * n, 2 * n, n, n));
  for (int m = 0; m < 6; ++m) EXPECT_NEAR(es.eigenvalues()(m), -0.09 + m, 1e-9);
}

TEST(LabHamiltonian, HermitianAtSampledTimes) {
  const DriveParams p = sideband_params(0.1);
  const HilbertSpace s(8);
  const auto h = build_lab_hamiltonian(p, s);
  for (double t : {0.0, 0.3 / p.omega_m, 7.7 / p.omega_m}) EXPECT_LT(h(t).hermiticity_error(), 1e-12);
}

TEST(LabHamiltonian, PolaronShiftOfTransition) {
  // Lowest |g1> -> |e> gap with drives off equals nu_1 - g^2/omega_m.
  DriveParams p;
  p.omega_m = 1.0;
  p.g = 0.2;
  p.nu_1 = 5.0;
  const int n = 40;
  const CMatrix h = build_lab_hamiltonian(p, HilbertSpace(n)).at(0.0);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h.block(2 * n, 2 * n, n, n));
  const double gap = es.eigenvalues()(0) - (-p.nu_1);
  EXPECT_NEAR(gap, p.nu_1 - p.g * p.g / p.omega_m, 1e-9);
  EXPECT_NEAR(detunings(p).Delta_1, p.nu_1 - 0.04 - p.omega_1, 1e-15);
}

TEST(PolaronTransform, IdentityWithoutCoupling) {
  DriveParams p;
  p.omega_m = 1.0;
  EXPECT_TRUE(polaron_transform(p, HilbertSpace(6)).entries().isApprox(CMatrix::Identity(18, 18)));
}

TEST(PolaronTransform, UnitaryAndGroundBlocksUntouched) {
  DriveParams p;
  p.omega_m = 1.0;
  p.g = 0.1;
  const HilbertSpace s(20);
  const OperatorMatrix u = polaron_transform(p, s);
  EXPECT_LT(low_block_error((u.adjoint() * u).entries(), CMatrix::Identity(60, 60), s, 12), 1e-9);
  EXPECT_TRUE(u.entries().topLeftCorner(40, 40).isApprox(CMatrix::Identity(40, 40)));
}

TEST(PolaronTransform, ConjugatedStaticPartMatchesAnalytic) {
  DriveParams p;
  p.omega_m = 1.0;
  p.g = 0.1;
  p.nu_1 = 3.0;
  p.nu_2 = 2.0;
  const HilbertSpace s(20);
  const OperatorMatrix u = polaron_transform(p, s);
  const OperatorMatrix conj = u.adjoint() * build_lab_hamiltonian(p, s).static_part() * u;
  const OperatorMatrix analytic = build_transformed_hamiltonian(p, s).static_part();
  EXPECT_LT(low_block_error(conj.entries(), analytic.entries(), s, 12), 1e-8);
}

TEST(PolaronTransform, ExcitedShiftCoefficient) {
  // The exact conjugation lowers |e> by g^2/omega_m, the same shift that
  // enters Delta_i = (nu_i - g^2/omega_m) - omega_i.
  DriveParams p;
  p.omega_m = 2.0;
  p.g = 0.4;
  const HilbertSpace s(6);
  const CMatrix h0 = build_transformed_hamiltonian(p, s).static_part().entries();
  const int e0 = s.index(Level::e, 0);
  EXPECT_DOUBLE_EQ(h0(e0, e0).real(), -p.g * p.g / p.omega_m);
  EXPECT_DOUBLE_EQ(std::abs(h0(e0, e0).real()), 0.08);
}

TEST(TransformedHamiltonian, ReducesToLabWithoutCoupling) {
  DriveParams p = sideband_params(0.0);
  const HilbertSpace s(5);
  const auto lab = build_lab_hamiltonian(p, s);
  const auto tr = build_transformed_hamiltonian(p, s);
  for (double t : {0.0, 0.37, 1.9}) EXPECT_LT((lab.at(t) - tr.at(t)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(TransformedHamiltonian, MatchesNumericalConjugation) {
  const DriveParams p = sideband_params(0.1);
  const HilbertSpace s(20);
  const OperatorMatrix u = polaron_transform(p, s);
  const auto lab = build_lab_hamiltonian(p, s);
  const auto tr = build_transformed_hamiltonian(p, s);
  for (double t : {0.0, 0.123, 0.777}) {
    const CMatrix conj = (u.adjoint() * lab(t) * u).entries();
    EXPECT_LT(low_block_error(conj, tr.at(t), s, 12), 1e-8) << t;
  }
}

TEST(InteractionHamiltonian, StaticWithoutCouplingOnResonance) {
  DriveParams p;
  p.omega_m = 1.0;
  p.nu_1 = 3.0;
  p.nu_2 = 2.0;
  p.omega_1 = 3.0;
  p.omega_2 = 2.0;
  p.Omega_1 = 0.4;
  p.Omega_2 = 0.2;
  const HilbertSpace s(3);
  const auto h = build_interaction_hamiltonian(p, s);
  EXPECT_LT((h.at(0.0) - h.at(2.3)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(h.at(0.0)(s.index(Level::e, 1), s.index(Level::g1, 1)).real(), 0.2, 1e-15);
  EXPECT_NEAR(h.at(0.0)(s.index(Level::e, 2), s.index(Level::g2, 2)).real(), 0.1, 1e-15);
}

TEST(InteractionHamiltonian, AtZeroIsParityConjugatedDrive) {
  const DriveParams p = sideband_params(0.1);
  const HilbertSpace s(12);
  const auto tr = build_transformed_hamiltonian(p, s);
  const OperatorMatrix pi = tensor_embed(electronic::identity(), phonon::parity(12), s);
  const CMatrix drive = (tr(0.0) - tr.static_part()).entries();
  const CMatrix expected = pi.entries() * drive * pi.entries();
  EXPECT_LT((build_interaction_hamiltonian(p, s).at(0.0) - expected).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(InteractionHamiltonian, HermitianAtSampledTimes) {
  const DriveParams p = sideband_params(0.1);
  const auto h = build_interaction_hamiltonian(p, HilbertSpace(10));
  proptest::Gen gen(9);
  for (int k = 0; k < 10; ++k) EXPECT_LT(h(gen.uniform(0.0, 5.0)).hermiticity_error(), 1e-12);
}

TEST(InteractionHamiltonian, FrameMapIsUnitaryAndDiagonal) {
  const DriveParams p = sideband_params(0.1);
  const HilbertSpace s(6);
  const CMatrix w = interaction_frame_map(p, s, 0.41).entries();
  EXPECT_LT((w * w.adjoint() - CMatrix::Identity(18, 18)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((w - CMatrix(w.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0 + 1e-300);
}

TEST(Propagation, StepHalvingConverges) {
  const DriveParams p = sideband_params(0.1);
  const HilbertSpace s(8);
  const auto h = build_interaction_hamiltonian(p, s);
  const Ket psi0 = Ket::basis(s, Level::g1, 2);
  PropagationOptions coarse;
  coarse.step_fraction = 1.0 / 20;
  PropagationOptions fine;
  fine.step_fraction = 1.0 / 40;
  PropagationOptions finer;
  finer.step_fraction = 1.0 / 80;
  const CVector a = propagate(h, psi0, 0.0, 0.5, coarse).amplitudes();
  const CVector b = propagate(h, psi0, 0.0, 0.5, fine).amplitudes();
  const CVector c = propagate(h, psi0, 0.0, 0.5, finer).amplitudes();
  // midpoint rule is second order: successive differences shrink by ~4
  EXPECT_LT((b - c).norm(), 0.35 * (a - b).norm());
  EXPECT_NEAR(c.norm(), 1.0, 1e-12);
}

TEST(Propagation, StaticTwoLevelRabi) {
  const LambdaDriveParams d{2.0, 0.0, 0.0, 0.0};
  const auto h = effective_lambda_hamiltonian(d);
  const Ket psi = propagate(h, Ket::basis(HilbertSpace(1), Level::g1, 0), 0.0, 0.9);
  EXPECT_NEAR(psi.level_population(Level::g1), std::pow(std::cos(0.9), 2), 1e-12);
}

TEST(FrameChain, TransformedAndInteractionPropagatorsAgree) {
  const DriveParams p = sideband_params(0.1);
  const HilbertSpace s(20);
  const auto tr = build_transformed_hamiltonian(p, s);
  const auto ip = build_interaction_hamiltonian(p, s);
  const double t1 = 1.0;
  PropagationOptions opt;
  opt.step_fraction = 1.0 / 80;
  for (auto [level, n] : {std::pair{Level::g1, 1}, std::pair{Level::g2, 0}, std::pair{Level::e, 2}}) {
    const Ket psi0 = Ket::basis(s, level, n);
    const CVector polaron = propagate(tr, psi0, 0.0, t1, opt).amplitudes();
    const CVector start = interaction_frame_map(p, s, 0.0).entries() * psi0.amplitudes();
    const CVector interaction = propagate(ip, Ket(s, start), 0.0, t1, opt).amplitudes();
    const CVector mapped = interaction_frame_map(p, s, t1).entries() * polaron;
    EXPECT_GT(state_fidelity(mapped, interaction), 1.0 - 1e-6);
  }
}

TEST(FrameChain, LabAndTransformedPropagatorsAgree) {
  const DriveParams p = sideband_params(0.1);
  const HilbertSpace s(20);
  const OperatorMatrix u = polaron_transform(p, s);
  const auto lab = build_lab_hamiltonian(p, s);
  const auto tr = build_transformed_hamiltonian(p, s);
  const Ket psi0 = Ket::basis(s, Level::g1, 1);
  PropagationOptions opt;
  opt.step_fraction = 1.0 / 80;
  const CVector lab_t = propagate(lab, Ket(s, u.entries() * psi0.amplitudes()), 0.0, 1.0, opt).amplitudes();
  const CVector tr_t = propagate(tr, psi0, 0.0, 1.0, opt).amplitudes();
  EXPECT_GT(state_fidelity(u.entries().adjoint() * lab_t, tr_t), 1.0 - 1e-6);
}

TEST(LambDicke, RedSidebandMatrixElement) {
  DriveParams p = sideband_params(0.05);
  const HilbertSpace s(8);
  const CMatrix h = lamb_dicke_hamiltonian(p, s).at(0.0);
  for (int n = 1; n < 8; ++n)
    EXPECT_NEAR(h(s.index(Level::e, n - 1), s.index(Level::g1, n)).real(), 0.5 * p.Omega_1 * 0.05 * std::sqrt(n),
                1e-14);
  EXPECT_NEAR(red_sideband_rabi(p, 4.0), 0.05 * 2.0 * p.Omega_1, 1e-14);
}

TEST(LambDicke, VacuumIsStationaryWithoutSecondDrive) {
  DriveParams p = sideband_params(0.05);
  p.Omega_2 = 0.0;
  const HilbertSpace s(5);
  const auto h = lamb_dicke_hamiltonian(p, s);
  const Ket psi0 = Ket::basis(s, Level::g1, 0);
  for (double t : {0.0, 0.4, 3.1}) EXPECT_LT((h.at(t) * psi0.amplitudes()).norm(), 1e-15);
}

TEST(LambDicke, BlueSidebandRaisesPhonon) {
  DriveParams p = sideband_params(0.05);
  const HilbertSpace s(4);
  const CMatrix h = lamb_dicke_hamiltonian(p, s, Sideband::blue).at(0.0);
  EXPECT_NEAR(h(s.index(Level::e, 1), s.index(Level::g1, 0)).real(), -0.5 * p.Omega_1 * 0.05, 1e-14);
  EXPECT_NEAR(std::abs(h(s.index(Level::e, 0), s.index(Level::g1, 1))), 0.0, 1e-15);
}

TEST(LambDicke, HermitianBuilders) {
  const DriveParams p = sideband_params(0.05);
  const HilbertSpace s(6);
  for (double t : {0.0, 0.21, 4.4}) {
    EXPECT_LT(lamb_dicke_hamiltonian(p, s)(t).hermiticity_error(), 1e-12);
    EXPECT_LT(lamb_dicke_hamiltonian(p, s, Sideband::blue)(t).hermiticity_error(), 1e-12);
    EXPECT_LT(build_transformed_hamiltonian(p, s)(t).hermiticity_error(), 1e-12);
  }
}

TEST(LambDicke, RedSidebandAgreesWithInteractionPicture) {
  // One sideband Rabi period starting from |g1, 1>, lambda = 0.05.
  DriveParams p;
  p.omega_m = 1.0;
  p.g = 0.05;
  p.Omega_1 = 0.005;
  p.Omega_2 = 0.0;
  p.nu_1 = 3.0;
  p.omega_1 = p.nu_1 - p.polaron_shift() - p.omega_m;
  const HilbertSpace s(6);
  const double period = 2.0 * std::numbers::pi / red_sideband_rabi(p, 1.0);
  const Ket psi0 = Ket::basis(s, Level::g1, 1);
  const CVector full = propagate(build_interaction_hamiltonian(p, s), psi0, 0.0, period).amplitudes();
  const CVector ld = propagate(lamb_dicke_hamiltonian(p, s), psi0, 0.0, period).amplitudes();
  EXPECT_LT(state_distance(full, ld), 0.01);
}

TEST(EffectiveRabi, AdiabaticElimination) {
  EXPECT_NEAR(units::to_mhz(effective_sideband_rabi(mhz(8), mhz(8), mhz(100))), 0.32, 1e-12);
  EXPECT_EQ(effective_sideband_rabi(0.0, mhz(8), mhz(100)), 0.0);
  EXPECT_NEAR(effective_sideband_rabi(3.0, 2.0, 10.0) / effective_sideband_rabi(3.0, 2.0, 20.0), 2.0, 1e-15);
  EXPECT_THROW(effective_sideband_rabi(1.0, 1.0, 0.0), InvalidInput);
}
