#ifndef ECHOMEM_CSV_HPP
#define ECHOMEM_CSV_HPP

#include <iosfwd>
#include <string>

namespace echomem {

/// Locale-independent shortest round-trip decimal representation, so CSV
/// output is byte-stable.
std::string format_number(double value);

}  // namespace echomem

#endif
