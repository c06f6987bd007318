#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace stonediag {

// Exact decimal money. All arithmetic happens on integer picodollars
// (1e-12 USD); rounding to cents occurs only when a value is displayed.
class Money {
public:
    Money() = default;
    static Money from_picodollars(std::int64_t pico) { return Money(pico); }

    std::int64_t picodollars() const { return pico_; }

    Money& operator+=(Money other) {
        pico_ += other.pico_;
        return *this;
    }
    friend Money operator+(Money a, Money b) { return Money(a.pico_ + b.pico_); }
    friend bool operator==(Money a, Money b) { return a.pico_ == b.pico_; }

    // Cents, rounded half-even. Display only; never feeds back into sums.
    std::int64_t cents_half_even() const;

    // "$7.06" style rendering.
    std::string display() const;

private:
    explicit Money(std::int64_t pico) : pico_(pico) {}
    std::int64_t pico_ = 0;
};

// Per-token rates in picodollars. Rates are configured as decimal dollars
// per one million tokens with at most six decimal places, which makes the
// per-token picodollar rate an exact integer.
struct PriceTable {
    std::int64_t prompt_pico_per_token = 0;
    std::int64_t completion_pico_per_token = 0;

    static std::int64_t parse_rate_per_million(std::string_view dollars);
};

Money cost_of(const PriceTable& prices, std::int64_t prompt_tokens,
              std::int64_t completion_tokens);

} // namespace stonediag
