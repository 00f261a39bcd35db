#pragma once

#include "momentlab/error.hpp"

#include <gmpxx.h>

#include <cctype>
#include <string>

namespace momentlab {

/// Parses "p/q", an integer, or a plain decimal ("0.125", "-3.5") into an exact rational.
inline mpq_class parse_rational(const std::string& text)
{
    std::string s;
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch)))
            s.push_back(ch);
    require(!s.empty(), "empty rational literal");
    mpq_class q;
    if (const auto dot = s.find('.'); dot != std::string::npos) {
        require(s.find('/') == std::string::npos && s.find_first_of("eE") == std::string::npos,
                "unsupported rational literal: " + text);
        const std::string frac = s.substr(dot + 1);
        std::string digits = s.substr(0, dot) + frac;
        if (digits == "-" || digits == "+" || digits.empty())
            digits += "0";
        mpz_class num;
        require(num.set_str(digits[0] == '+' ? digits.substr(1) : digits, 10) == 0,
                "unsupported rational literal: " + text);
        mpz_class den;
        mpz_ui_pow_ui(den.get_mpz_t(), 10, frac.size());
        q = mpq_class(num, den);
    } else {
        require(q.set_str(s[0] == '+' ? s.substr(1) : s, 10) == 0, "unsupported rational literal: " + text);
        require(q.get_den() != 0, "zero denominator in " + text);
    }
    q.canonicalize();
    return q;
}

inline double rational_to_double(const mpq_class& q) { return q.get_d(); }

} // namespace momentlab
