#include "hybridjd/csv.hpp"

#include <array>
#include <charconv>

namespace hybridjd {

std::string format_number(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return {buf.data(), res.ptr};
}

}  // namespace hybridjd
