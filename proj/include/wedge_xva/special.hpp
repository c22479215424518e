#pragma once

namespace wxva {

/// Exponentially scaled modified Bessel function e^{-z} I_nu(z) for real nu >= 0, z >= 0.
///
/// Power series below the switchover, Hankel's large-argument expansion above it for
/// moderate orders, and Debye's uniform expansion for large orders.
double bessel_i_scaled(double nu, double z);

/// Quadrature controls for the zeta-integrals behind f(p, q) and the image kernel.
struct ZetaQuadrature {
    int points_per_panel = 20;
    double exponent_cutoff = 40.0;  // integrand truncated once the exponent exceeds this
};

/// f(p, q) = 1 - (1/2pi) Int exp(-p (cosh(2 q zeta) - cos q)) / (zeta^2 + 1/4) dzeta.
double special_f(double p, double q, const ZetaQuadrature& quad = {});

/// h(p, q) = [s+ f(p, pi + q) + s- f(p, pi - q)] / 2 with s+- = sign(pi +- q).
double special_h(double p, double q, const ZetaQuadrature& quad = {});

/// (1/2pi) Int exp(-p (cosh(2 Q zeta) - 1)) / (zeta^2 + 1/4) dzeta, in (0, 1].
///
/// e^{-p} times this is the correction term of f; keeping the e^{-p} factor separate lets
/// callers fold it into their Gaussian prefactor.
double jhat_scaled(double p, double Q, const ZetaQuadrature& quad = {});

} // namespace wxva
