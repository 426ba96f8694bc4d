#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace liqguard {

// Fixed-point monetary amount with 18 fractional digits on a 128-bit raw
// integer. Addition, subtraction and comparison are exact, so ledger
// bookkeeping (wallet debits/credits, feasibility scans) never drifts.
// Multiplication routes through a 256-bit intermediate with an explicit
// rounding mode; USD aggregation is done in doubles by the callers.
class Amount {
public:
    static constexpr int kFracDigits = 18;

    enum class Round { nearest, down, up };

    constexpr Amount() = default;

    static Amount from_raw(__int128 raw);
    static Amount from_int(std::int64_t units);
    static Amount from_double(double value);      // rounds to nearest unit
    static Amount parse(std::string_view text);   // exact decimal string

    double to_double() const;
    std::string to_string() const;  // canonical form, trailing zeros trimmed
    __int128 raw() const { return raw_; }

    bool is_zero() const { return raw_ == 0; }
    bool is_negative() const { return raw_ < 0; }
    bool is_positive() const { return raw_ > 0; }

    Amount operator-() const { return from_raw(-raw_); }
    Amount operator+(const Amount& o) const { return from_raw(raw_ + o.raw_); }
    Amount operator-(const Amount& o) const { return from_raw(raw_ - o.raw_); }
    Amount& operator+=(const Amount& o) { raw_ += o.raw_; return *this; }
    Amount& operator-=(const Amount& o) { raw_ -= o.raw_; return *this; }

    // this * factor where factor is itself a fixed-point value.
    Amount mul(const Amount& factor, Round mode = Round::nearest) const;

    bool operator==(const Amount& o) const { return raw_ == o.raw_; }
    bool operator!=(const Amount& o) const { return raw_ != o.raw_; }
    bool operator<(const Amount& o) const { return raw_ < o.raw_; }
    bool operator<=(const Amount& o) const { return raw_ <= o.raw_; }
    bool operator>(const Amount& o) const { return raw_ > o.raw_; }
    bool operator>=(const Amount& o) const { return raw_ >= o.raw_; }

private:
    __int128 raw_ = 0;
};

Amount min(const Amount& a, const Amount& b);
Amount max(const Amount& a, const Amount& b);

}  // namespace liqguard
