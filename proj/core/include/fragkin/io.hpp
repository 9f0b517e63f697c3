#ifndef FRAGKIN_IO_HPP
#define FRAGKIN_IO_HPP

#include <string>

namespace fragkin {

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

// Writes through a temporary file in the same directory, then renames.
void atomic_write(const std::string& path, const std::string& content);

}  // namespace fragkin

#endif
