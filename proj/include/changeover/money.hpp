#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace changeover {

/// Exact currency amount stored as integer cents.
/// Cash, fees and prices all use this type.
class Money {
public:
    constexpr Money() = default;

    static constexpr Money from_cents(std::int64_t cents) { return Money(cents); }

    /// Rounds half away from zero to the nearest cent.
    static Money from_decimal(double amount);

    /// Parses a decimal literal such as "12.345" or "-3". Digits past the
    /// second decimal place are rounded half up. Throws DataError on junk.
    static Money parse(std::string_view text);

    constexpr std::int64_t cents() const { return cents_; }
    constexpr double to_double() const { return static_cast<double>(cents_) / 100.0; }

    /// Fixed two-decimal rendering, e.g. "-0.05".
    std::string to_string() const;

    constexpr Money operator-() const { return Money(-cents_); }
    constexpr Money& operator+=(Money other) {
        cents_ += other.cents_;
        return *this;
    }
    constexpr Money& operator-=(Money other) {
        cents_ -= other.cents_;
        return *this;
    }
    friend constexpr Money operator+(Money a, Money b) { return Money(a.cents_ + b.cents_); }
    friend constexpr Money operator-(Money a, Money b) { return Money(a.cents_ - b.cents_); }
    friend constexpr Money operator*(Money a, std::int64_t k) { return Money(a.cents_ * k); }
    friend constexpr Money operator*(std::int64_t k, Money a) { return Money(a.cents_ * k); }

    friend constexpr auto operator<=>(Money, Money) = default;

private:
    constexpr explicit Money(std::int64_t cents) : cents_(cents) {}

    std::int64_t cents_ = 0;
};

}  // namespace changeover
