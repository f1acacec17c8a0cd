#include <array>
#include <cmath>

#include "doctest.h"
#include "echomem/core.hpp"
#include "support.hpp"

using namespace echomem;

TEST_SUITE("core")
{
    TEST_CASE("build_time_grid sample counts")
    {
        const auto g = build_time_grid(0.0, 10.0, 0.001);
        CHECK(g.size() == 10001);
        CHECK(g.t_end() == doctest::Approx(10.0).epsilon(1e-12));

        const auto g2 = build_time_grid(0.0, 4.0, 0.0005);
        CHECK(g2.size() == 8001);
        // Room for a 1.6 us storage experiment: data at 0.1, echo at 1.7.
        EchoSequence seq;
        seq.data_pulses = {PulseSpec{0.1, 0.015, 0.1}};
        seq.read_pulse = PulseSpec{0.9, 0.015, kPi};
        const auto echo = predict_echo_times(seq).at(0);
        CHECK(echo == doctest::Approx(1.7));
        CHECK(echo + default_half_width(seq) < g2.t_end());
    }

    TEST_CASE("build_time_grid rejects degenerate input")
    {
        CHECK_THROWS_AS(build_time_grid(0.0, 1.0, 2.0), ConfigError);
        CHECK_THROWS_AS(build_time_grid(0.0, 1.0, 0.0), ConfigError);
        CHECK_THROWS_AS(build_time_grid(0.0, 1.0, -0.1), ConfigError);
        CHECK_THROWS_AS(build_time_grid(1.0, 1.0, 0.1), ConfigError);
    }

    TEST_CASE("nearest_index clamps")
    {
        const auto g = build_time_grid(0.0, 1.0, 0.1);
        CHECK(g.nearest_index(-5.0) == 0);
        CHECK(g.nearest_index(0.34) == 3);
        CHECK(g.nearest_index(99.0) == g.size() - 1);
    }

    TEST_CASE("rectangular pi pulse height")
    {
        const auto g = build_time_grid(0.0, 0.2, 0.0005);
        const PulseSpec p{0.1, 0.015, kPi};
        const auto e = sample_pulse(p, g);
        const double height = kPi / 0.015;
        std::size_t full = 0;
        for (std::size_t k = 0; k < e.size(); ++k) {
            const double t = g.time(k);
            if (std::abs(t - 0.1) < 0.0075 - 0.0005) {
                CHECK(std::abs(e[k]) == doctest::Approx(height).epsilon(1e-12));
                ++full;
            }
            if (std::abs(t - 0.1) > 0.0075 + 0.0005) {
                CHECK(e[k] == cplx{});
            }
        }
        CHECK(full >= 28);
        CHECK(envelope_area(e) == doctest::Approx(kPi).epsilon(1e-12));
    }

    TEST_CASE("zero-area pulse is all zero")
    {
        const auto g = build_time_grid(0.0, 0.2, 0.0005);
        const auto e = sample_pulse(PulseSpec{0.1, 0.015, 0.0}, g);
        CHECK(envelope_energy(e) == 0.0);
        CHECK(test::peak_amplitude(e) == 0.0);
    }

    TEST_CASE("gaussian area fidelity")
    {
        const auto g = build_time_grid(0.0, 0.2, 0.0005);
        PulseSpec p{0.1, 0.015, kPi / 10.0, PulseShape::gaussian};
        const auto e = sample_pulse(p, g);
        CHECK(std::abs(envelope_area(e) / (kPi / 10.0) - 1.0) < 1e-3);
    }

    TEST_CASE("pulse phase sets the carrier")
    {
        const auto g = build_time_grid(0.0, 0.2, 0.0005);
        PulseSpec p{0.1, 0.015, 1.0};
        p.phase = 0.7;
        const auto e = sample_pulse(p, g);
        const cplx s = e[g.nearest_index(0.1)];
        CHECK(std::arg(s) == doctest::Approx(0.7));
    }

    TEST_CASE("truncated pulse is rejected")
    {
        const auto g = build_time_grid(0.0, 0.2, 0.0005);
        CHECK_THROWS_AS(sample_pulse(PulseSpec{0.005, 0.015, 1.0}, g), ConfigError);
        CHECK_THROWS_AS(sample_pulse(PulseSpec{0.1, 0.015, 1.0, PulseShape::gaussian, 0.0}, build_time_grid(0, 0.12, 0.0005)),
                        ConfigError);
    }

    TEST_CASE("area fidelity property over durations, shapes and offsets")
    {
        // Any pulse with duration >= 10 dt keeps its declared area to 0.1%.
        const double dt = 0.0005;
        const auto g = build_time_grid(0.0, 2.0, dt);
        for (auto shape : {PulseShape::rectangular, PulseShape::gaussian}) {
            for (double dur : {10 * dt, 0.0073, 0.015, 0.05, 0.2}) {
                for (double offset : {0.0, 0.13 * dt, 0.5 * dt, 0.77 * dt}) {
                    for (double area : {0.01, 0.1, kPi / 2, kPi, 2 * kPi}) {
                        PulseSpec p{1.0 + offset, dur, area, shape};
                        const auto e = sample_pulse(p, g);
                        CAPTURE(dur);
                        CAPTURE(offset);
                        CHECK(std::abs(envelope_area(e) / area - 1.0) < 1e-3);
                    }
                }
            }
        }
    }

    TEST_CASE("grid refinement changes pulse area by < 0.05%")
    {
        for (auto shape : {PulseShape::rectangular, PulseShape::gaussian}) {
            for (double dur : {0.01, 0.015, 0.04}) {
                PulseSpec p{0.5003, dur, 1.3, shape};
                const double a1 = envelope_area(sample_pulse(p, build_time_grid(0.0, 1.0, 0.001)));
                const double a2 = envelope_area(sample_pulse(p, build_time_grid(0.0, 1.0, 0.0005)));
                CHECK(std::abs(a2 / a1 - 1.0) < 5e-4);
            }
        }
    }

    TEST_CASE("superpose: three disjoint rectangles")
    {
        const auto g = build_time_grid(-0.05, 0.4, 0.0005);
        const std::array<PulseSpec, 3> pulses{PulseSpec{0.0, 0.015, 0.1}, PulseSpec{0.15, 0.015, 0.1},
                                              PulseSpec{0.3, 0.015, 0.1}};
        const auto e = superpose(pulses, g);
        for (const auto& p : pulses) {
            CHECK(std::abs(e[g.nearest_index(p.center)]) == doctest::Approx(0.1 / 0.015));
        }
        CHECK(std::abs(e[g.nearest_index(0.075)]) == 0.0);
        CHECK(std::abs(e[g.nearest_index(0.225)]) == 0.0);
        CHECK(envelope_area(e) == doctest::Approx(0.3).epsilon(1e-9));
    }

    TEST_CASE("superpose: empty list and overlap")
    {
        const auto g = build_time_grid(0.0, 0.4, 0.0005);
        const auto e = superpose(std::span<const PulseSpec>{}, g);
        CHECK(e.size() == g.size());
        CHECK(envelope_energy(e) == 0.0);

        const std::array<PulseSpec, 2> clash{PulseSpec{0.1, 0.015, 0.1}, PulseSpec{0.1, 0.015, 0.2}};
        try {
            (void)superpose(clash, g);
            FAIL("expected overlap error");
        } catch (const ConfigError& err) {
            CHECK(std::string(err.what()).find("pulses 0 and 1 overlap") != std::string::npos);
        }
    }

    TEST_CASE("superposition linearity")
    {
        const auto g = build_time_grid(0.0, 1.0, 0.0005);
        const std::vector<PulseSpec> a{PulseSpec{0.1, 0.015, 0.3}, PulseSpec{0.5, 0.02, 1.0, PulseShape::gaussian, 0.4}};
        const std::vector<PulseSpec> b{PulseSpec{0.3, 0.015, kPi, PulseShape::rectangular, -1.0}, PulseSpec{0.8, 0.01, 0.2}};
        std::vector<PulseSpec> both = a;
        both.insert(both.end(), b.begin(), b.end());
        const auto sum = superpose(a, g) + superpose(b, g);
        CHECK(test::max_abs_difference(superpose(both, g), sum) < 1e-12);
    }

    TEST_CASE("envelope_energy laws")
    {
        const auto g = build_time_grid(0.0, 2.0, 0.001);
        CHECK(envelope_energy(ComplexEnvelope(g)) == 0.0);

        // Edges on cell boundaries: every covered sample is a full cell.
        const auto e = sample_pulse(PulseSpec{1.0005, 1.0, 1.0}, g);
        CHECK(envelope_energy(e) == doctest::Approx(1.0).epsilon(1e-12));
        // Edges on samples: the two half cells lose dt/2 of energy.
        const auto edge = sample_pulse(PulseSpec{1.0, 1.0, 1.0}, g);
        CHECK(envelope_energy(edge) == doctest::Approx(1.0 - 0.5 * g.dt()).epsilon(1e-12));
        CHECK(envelope_energy(cplx{2.0, 0.0} * e) == doctest::Approx(4.0 * envelope_energy(e)).epsilon(1e-12));
    }

    TEST_CASE("grid mismatch is rejected")
    {
        ComplexEnvelope a(build_time_grid(0.0, 1.0, 0.1));
        ComplexEnvelope b(build_time_grid(0.0, 1.0, 0.05));
        CHECK_THROWS_AS(a += b, GridMismatchError);
    }

    TEST_CASE("slice keeps time origin")
    {
        const auto g = build_time_grid(0.0, 1.0, 0.1);
        ComplexEnvelope e(g);
        e[3] = {1.0, 2.0};
        const auto s = e.slice(3, 4);
        CHECK(s.size() == 4);
        CHECK(s.grid().t_start() == doctest::Approx(0.3));
        CHECK(s[0] == cplx{1.0, 2.0});
    }

    TEST_CASE("line shapes are normalized densities")
    {
        for (auto kind : {LineKind::gaussian, LineKind::lorentzian}) {
            LineShape line{kind, 150.0, 3.0};
            double sum = 0.0;
            const double h = 0.05;
            for (double x = -40000.0; x <= 40000.0; x += h) {
                sum += line.density(x) * h;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(kind == LineKind::gaussian ? 1e-9 : 3e-3));
            CHECK(line.density(3.0 + 75.0) == doctest::Approx(0.5 * line.density(3.0)));
        }
    }

    TEST_CASE("name round trips")
    {
        CHECK(parse_pulse_shape(to_string(PulseShape::gaussian)) == PulseShape::gaussian);
        CHECK(parse_line_kind(to_string(LineKind::lorentzian)) == LineKind::lorentzian);
        CHECK_THROWS_AS(parse_pulse_shape("triangle"), ConfigError);
    }

    TEST_CASE("ensemble validation")
    {
        EnsembleSpec e;
        CHECK_NOTHROW(e.validate());
        e.decohered_fraction = 1.5;
        CHECK_THROWS_AS(e.validate(), ConfigError);
        e.decohered_fraction = 0.0;
        e.T2 = -1.0;
        CHECK_THROWS_AS(e.validate(), ConfigError);
    }
}
