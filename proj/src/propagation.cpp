#include "echomem/propagation.hpp"

#include <cmath>
#include <sstream>

namespace echomem {

namespace {

const cplx kMinusI{0.0, -1.0};

}  // namespace

void MediumSpec::validate() const
{
    ensemble.validate();
    if (n_slices < 1) {
        throw ConfigError("medium: n_slices must be at least 1");
    }
    if (!(coupling >= 0.0) || !std::isfinite(coupling)) {
        throw ConfigError("medium: coupling must be non-negative");
    }
    const double per_slice = ensemble.alpha_l / static_cast<double>(n_slices);
    if (per_slice > kMaxSliceDepth + 1e-12) {
        std::ostringstream msg;
        msg << "medium: per-slice optical depth " << per_slice << " exceeds " << kMaxSliceDepth << "; use at least "
            << minimum_slices(ensemble.alpha_l) << " slices";
        throw ConfigError(msg.str());
    }
}

std::size_t minimum_slices(double alpha_l)
{
    const auto n = static_cast<std::size_t>(std::ceil(alpha_l / kMaxSliceDepth - 1e-9));
    return n < 1 ? 1 : n;
}

namespace {

// Line-center density of the inhomogeneous line convolved with the
// homogeneous Lorentzian of half-width 1/T2, relative to the bare line.
double homogeneous_correction(const LineShape& line, double T2)
{
    if (!std::isfinite(T2)) {
        return 1.0;
    }
    const double gamma = 1.0 / T2;
    if (line.kind == LineKind::lorentzian) {
        const double hw = 0.5 * line.fwhm;
        return hw / (hw + gamma);
    }
    // Voigt profile at its center: exp(y^2) erfc(y) with y = gamma / (sigma sqrt 2).
    const double sigma = line.fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    const double y = gamma / (sigma * std::sqrt(2.0));
    return std::exp(y * y) * std::erfc(y);
}

}  // namespace

double calibrate_coupling(double alpha_l, const LineShape& line, const DetuningGrid& grid, double T2)
{
    if (!(alpha_l >= 0.0)) {
        throw ConfigError("calibrate_coupling: alphaL must be non-negative");
    }
    if (alpha_l == 0.0) {
        return 0.0;
    }
    // A weak probe resonant with the line center drives a polarization
    // P = -(i/2) * pi * g(center) * Omega once the inhomogeneous response has
    // settled, so dOmega/dz = -(coupling/L) * (pi g/2) * Omega. The density is
    // taken from the discretized weights so that truncation of the line is
    // accounted for.
    double density = line.density(line.center);
    if (grid.size() >= 2) {
        std::size_t nearest = 0;
        for (std::size_t k = 1; k < grid.size(); ++k) {
            if (std::abs(grid.detunings[k] - line.center) < std::abs(grid.detunings[nearest] - line.center)) {
                nearest = k;
            }
        }
        density = grid.weights[nearest] / grid.spacing();
    }
    return alpha_l / (kPi * density * homogeneous_correction(line, T2));
}

MediumSpec make_medium(const EnsembleSpec& ensemble, const DetuningGrid& grid, std::size_t n_slices)
{
    ensemble.validate();
    MediumSpec m;
    m.ensemble = ensemble;
    m.n_slices = n_slices == 0 ? minimum_slices(ensemble.alpha_l) : n_slices;
    m.coupling = calibrate_coupling(ensemble.alpha_l, ensemble.line, grid, ensemble.T2);
    m.validate();
    return m;
}

ComplexEnvelope emit_thin_medium(const ComplexEnvelope& drive, const ComplexEnvelope& polarization, double coupling)
{
    require_same_grid(drive, polarization, "emit_thin_medium");
    ComplexEnvelope out = drive;
    const cplx factor = kMinusI * coupling;
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] += factor * polarization[k];
    }
    return out;
}

ComplexEnvelope propagate_maxwell_bloch(const ComplexEnvelope& input, const MediumSpec& medium,
                                        const DetuningGrid& grid)
{
    medium.validate();
    const auto& ens = medium.ensemble;
    if (medium.coupling == 0.0) {
        return input;
    }
    const double h = medium.coupling / static_cast<double>(medium.n_slices);
    const double collective = 1.0 - ens.decohered_fraction;

    ComplexEnvelope field = input;
    for (std::size_t s = 0; s < medium.n_slices; ++s) {
        ComplexEnvelope p1 = ensemble_polarization(field, grid, ens.T1, ens.T2);
        p1 *= collective;
        ComplexEnvelope predicted = emit_thin_medium(field, p1, h);
        ComplexEnvelope p2 = ensemble_polarization(predicted, grid, ens.T1, ens.T2);
        p2 *= collective;
        const cplx factor = kMinusI * (0.5 * h);
        for (std::size_t k = 0; k < field.size(); ++k) {
            field[k] += factor * (p1[k] + p2[k]);
        }
    }
    return field;
}

}  // namespace echomem
