#include "stonediag/decimal.hpp"

#include "stonediag/errors.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>

namespace stonediag {

namespace {
// Round q = n / d to the nearest integer, ties to even. n >= 0, d > 0.
std::int64_t div_half_even(std::int64_t n, std::int64_t d) {
    std::int64_t q = n / d;
    std::int64_t r = n % d;
    if (2 * r > d || (2 * r == d && (q % 2) != 0)) ++q;
    return q;
}
} // namespace

std::int64_t Money::cents_half_even() const {
    const bool neg = pico_ < 0;
    std::int64_t mag = neg ? -pico_ : pico_;
    std::int64_t cents = div_half_even(mag, 10'000'000'000LL);
    return neg ? -cents : cents;
}

std::string Money::display() const {
    std::int64_t cents = cents_half_even();
    const bool neg = cents < 0;
    if (neg) cents = -cents;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%s$%lld.%02lld", neg ? "-" : "",
                  static_cast<long long>(cents / 100), static_cast<long long>(cents % 100));
    return buf;
}

std::int64_t PriceTable::parse_rate_per_million(std::string_view dollars) {
    std::string_view s = dollars;
    if (!s.empty() && s.front() == '$') s.remove_prefix(1);
    if (s.empty()) throw ConfigError("price: empty rate");

    std::int64_t whole = 0;
    std::size_t i = 0;
    bool any_digit = false;
    for (; i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])); ++i) {
        whole = whole * 10 + (s[i] - '0');
        if (whole > 1'000'000'000LL) throw ConfigError("price: rate too large");
        any_digit = true;
    }
    std::int64_t frac = 0;
    int frac_digits = 0;
    if (i < s.size() && s[i] == '.') {
        ++i;
        for (; i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])); ++i) {
            if (++frac_digits > 6)
                throw ConfigError("price: more than 6 decimal places in '" + std::string(dollars) +
                                  "'; rates must stay exact");
            frac = frac * 10 + (s[i] - '0');
            any_digit = true;
        }
    }
    if (!any_digit || i != s.size())
        throw ConfigError("price: malformed rate '" + std::string(dollars) + "'");

    // dollars per 1M tokens -> picodollars per token is a factor of 1e6.
    std::int64_t scale = 1;
    for (int k = frac_digits; k < 6; ++k) scale *= 10;
    return whole * 1'000'000LL + frac * scale;
}

Money cost_of(const PriceTable& prices, std::int64_t prompt_tokens,
              std::int64_t completion_tokens) {
    return Money::from_picodollars(prompt_tokens * prices.prompt_pico_per_token +
                                   completion_tokens * prices.completion_pico_per_token);
}

} // namespace stonediag
