#ifndef ECHOMEM_BLOCH_HPP
#define ECHOMEM_BLOCH_HPP

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "echomem/core.hpp"

namespace echomem {

class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two-level atom in the rotating frame: coherence sigma = rho_eg and
/// inversion w = rho_ee - rho_gg. Ground state is (0, -1).
struct AtomState {
    cplx coherence{};
    double inversion = -1.0;

    /// 4|sigma|^2 + w^2; equals 1 for a pure state.
    double bloch_norm() const { return 4.0 * std::norm(coherence) + inversion * inversion; }
    static AtomState ground() { return {}; }
};

struct DetuningGrid {
    std::vector<double> detunings;
    std::vector<double> weights;

    std::size_t size() const { return detunings.size(); }
    double max_abs_detuning() const;
    /// Uniform spacing, or 0 for a single point.
    double spacing() const;
    void validate() const;
};

/// Largest permitted dt * max(|Delta|, |Omega|) for the fixed-step integrator.
inline constexpr double kMaxPhaseStep = 0.1;

/// Throws IntegrationError when the drive grid is too coarse for the
/// largest detuning or Rabi amplitude.
void check_step_size(const ComplexEnvelope& drive, double max_abs_detuning);

/// Fixed-step RK4 integration of
///   dsigma/dt = (i*Delta - 1/T2) sigma + (i/2) Omega w
///   dw/dt     = i (Omega* sigma - Omega sigma*) - (w + 1)/T1
/// on the drive's grid. Returns one state per grid sample.
std::vector<AtomState> evolve_atom(const ComplexEnvelope& drive, double detuning, double T1, double T2,
                                   AtomState initial = AtomState::ground());

/// n points uniformly covering center +/- span*FWHM/2 with weights
/// proportional to the line density, normalized to 1.
DetuningGrid discretize_line(const LineShape& line, std::size_t n, double span);

inline constexpr std::size_t kDefaultQuadraturePoints = 2001;
inline constexpr double kDefaultQuadratureSpan = 6.0;

/// Weighted coherence P(t) = sum_k weight_k sigma_k(t) of an ensemble that
/// starts in the ground state. Parallel over detuning blocks; the reduction
/// order is fixed.
ComplexEnvelope ensemble_polarization(const ComplexEnvelope& drive, const DetuningGrid& grid, double T1, double T2);

}  // namespace echomem

#endif
