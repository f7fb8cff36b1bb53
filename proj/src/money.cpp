#include "changeover/money.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "changeover/errors.hpp"

namespace changeover {

Money Money::from_decimal(double amount) {
    if (!std::isfinite(amount)) {
        throw DataError("non-finite currency amount");
    }
    return Money(static_cast<std::int64_t>(std::llround(amount * 100.0)));
}

Money Money::parse(std::string_view text) {
    auto fail = [&]() -> Money {
        throw DataError("cannot parse currency amount '" + std::string(text) + "'");
    };
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) return fail();

    bool negative = false;
    if (text.front() == '+' || text.front() == '-') {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }
    std::int64_t whole = 0;
    std::size_t i = 0;
    std::size_t whole_digits = 0;
    for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i, ++whole_digits) {
        if (whole > std::numeric_limits<std::int64_t>::max() / 1000) return fail();
        whole = whole * 10 + (text[i] - '0');
    }
    std::int64_t frac = 0;
    std::size_t frac_digits = 0;
    bool round_up = false;
    if (i < text.size() && text[i] == '.') {
        ++i;
        for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i, ++frac_digits) {
            int d = text[i] - '0';
            if (frac_digits < 2) {
                frac = frac * 10 + d;
            } else if (frac_digits == 2) {
                round_up = d >= 5;
            }
        }
    }
    if (i != text.size() || (whole_digits == 0 && frac_digits == 0)) return fail();
    if (frac_digits == 1) frac *= 10;

    std::int64_t cents = whole * 100 + frac + (round_up ? 1 : 0);
    return Money(negative ? -cents : cents);
}

std::string Money::to_string() const {
    std::int64_t abs = cents_ < 0 ? -cents_ : cents_;
    std::string out = cents_ < 0 ? "-" : "";
    out += std::to_string(abs / 100);
    out += '.';
    std::int64_t frac = abs % 100;
    if (frac < 10) out += '0';
    out += std::to_string(frac);
    return out;
}

}  // namespace changeover
