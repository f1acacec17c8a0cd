#ifndef ECHOMEM_PROPAGATION_HPP
#define ECHOMEM_PROPAGATION_HPP

#include <cstddef>

#include "echomem/bloch.hpp"
#include "echomem/core.hpp"

namespace echomem {

/// Largest optical depth a single slice may carry.
inline constexpr double kMaxSliceDepth = 0.2;

struct MediumSpec {
    EnsembleSpec ensemble;
    std::size_t n_slices = 1;
    /// Total field-polarization coupling of the medium (all slices).
    double coupling = 0.0;

    void validate() const;
};

/// Smallest slice count keeping alphaL / n_slices <= kMaxSliceDepth.
std::size_t minimum_slices(double alpha_l);

/// Coupling that gives a weak resonant quasi-CW probe an amplitude
/// transmission of exp(-alphaL/2) through the full medium. A finite T2
/// broadens every atom's response and lowers the line-center absorption
/// slightly; passing it folds that into the calibration.
double calibrate_coupling(double alpha_l, const LineShape& line, const DetuningGrid& grid, double T2 = kInf);

/// Builds a medium with calibrated coupling. n_slices = 0 selects
/// minimum_slices(alphaL).
MediumSpec make_medium(const EnsembleSpec& ensemble, const DetuningGrid& grid, std::size_t n_slices = 0);

/// First Born approximation: E_out = E_in - i * coupling * P.
ComplexEnvelope emit_thin_medium(const ComplexEnvelope& drive, const ComplexEnvelope& polarization, double coupling);

/// Forward 1-D Maxwell-Bloch marching, dOmega/dz = -i (coupling/L) P(z,t),
/// with a Heun predictor-corrector step per slice. Each slice is a fresh
/// ground-state ensemble. The collective polarization is scaled by
/// (1 - decohered_fraction).
ComplexEnvelope propagate_maxwell_bloch(const ComplexEnvelope& input, const MediumSpec& medium,
                                        const DetuningGrid& grid);

}  // namespace echomem

#endif
