// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <span>
#include <string>

namespace trimask::fmt {

// Shortest decimal that parses back to the same double.
inline void append_number(std::string& out, double value) {
    if (value == 0.0 && std::signbit(value)) {
        out += "-0.0";  // "-0" would read back as integer zero
        return;
    }
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    (void)ec;
    out.append(buf.data(), end);
}

inline std::string number(double value) {
    std::string s;
    append_number(s, value);
    return s;
}

inline void append_array(std::string& out, std::span<const double> values) {
    out.push_back('[');
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i != 0) out.push_back(',');
        append_number(out, values[i]);
    }
    out.push_back(']');
}

template <typename Int>
void append_int_array(std::string& out, std::span<const Int> values) {
    out.push_back('[');
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i != 0) out.push_back(',');
        out += std::to_string(values[i]);
    }
    out.push_back(']');
}

}  // namespace trimask::fmt
