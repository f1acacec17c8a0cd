#ifndef ECHOMEM_TEST_SUPPORT_HPP
#define ECHOMEM_TEST_SUPPORT_HPP

#include <algorithm>
#include <cmath>

#include "echomem/bloch.hpp"
#include "echomem/core.hpp"
#include "echomem/echo.hpp"

namespace echomem::test {

inline double peak_amplitude(const ComplexEnvelope& e)
{
    double m = 0.0;
    for (const auto& s : e.samples()) {
        m = std::max(m, std::abs(s));
    }
    return m;
}

inline double max_abs_difference(const ComplexEnvelope& a, const ComplexEnvelope& b)
{
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        m = std::max(m, std::abs(a[k] - b[k]));
    }
    return m;
}

// Data pulse at t_data, read pulse t12 later; 15 ns rectangular pulses.
inline EchoSequence two_pulse(double t12, double theta1 = 0.1, double theta2 = kPi, double t_data = 0.1)
{
    EchoSequence seq;
    seq.data_pulses = {PulseSpec{t_data, 0.015, theta1}};
    seq.read_pulse = PulseSpec{t_data + t12, 0.015, theta2};
    return seq;
}

// Grid from 0 to one window plus margin past the last predicted echo.
inline TimeGrid echo_grid(const EchoSequence& seq, double half_width = 0.045, double dt = 0.0002)
{
    const auto times = predict_echo_times(seq);
    const double last = times.empty() ? seq.read_pulse.support_end() : *std::max_element(times.begin(), times.end());
    return build_time_grid(0.0, last + half_width + 0.05, dt);
}

// Thin-medium polarization of the default ensemble.
inline ComplexEnvelope thin_polarization(const EchoSequence& seq, const TimeGrid& grid, double T2,
                                         std::size_t points = kDefaultQuadraturePoints)
{
    const auto dg = discretize_line(LineShape{}, points, kDefaultQuadratureSpan);
    return ensemble_polarization(superpose(seq.all_pulses(), grid), dg, kInf, T2);
}

}  // namespace echomem::test

#endif
