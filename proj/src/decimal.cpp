#include "liqguard/decimal.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "liqguard/errors.hpp"

namespace liqguard {

namespace {

using int256 = boost::multiprecision::int256_t;

constexpr __int128 pow10_128(int n) {
    __int128 v = 1;
    for (int i = 0; i < n; ++i) v *= 10;
    return v;
}

constexpr __int128 kScale = pow10_128(Amount::kFracDigits);

}  // namespace

Amount Amount::from_raw(__int128 raw) {
    Amount a;
    a.raw_ = raw;
    return a;
}

Amount Amount::from_int(std::int64_t units) {
    return from_raw(static_cast<__int128>(units) * kScale);
}

Amount Amount::from_double(double value) {
    if (!std::isfinite(value)) fail(ErrorKind::input, "non-finite amount");
    long double scaled = static_cast<long double>(value) * static_cast<long double>(1e18L);
    if (scaled >= 1.7e38L || scaled <= -1.7e38L)
        fail(ErrorKind::input, "amount out of range");
    return from_raw(static_cast<__int128>(roundl(scaled)));
}

Amount Amount::parse(std::string_view text) {
    if (text.empty()) fail(ErrorKind::data, "empty amount");
    // Exponent notation falls back to double parsing.
    if (text.find('e') != std::string_view::npos ||
        text.find('E') != std::string_view::npos) {
        std::string buf(text);
        char* end = nullptr;
        double v = std::strtod(buf.c_str(), &end);
        if (end == buf.c_str() || *end != '\0')
            fail(ErrorKind::data, "malformed amount: " + buf);
        return from_double(v);
    }

    std::size_t i = 0;
    bool negative = false;
    if (text[i] == '+' || text[i] == '-') {
        negative = (text[i] == '-');
        ++i;
    }
    if (i >= text.size()) fail(ErrorKind::data, "malformed amount");

    __int128 integral = 0;
    bool any_digit = false;
    for (; i < text.size() && text[i] != '.'; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i])))
            fail(ErrorKind::data, "malformed amount: " + std::string(text));
        if (integral > pow10_128(20))
            fail(ErrorKind::data, "amount out of range: " + std::string(text));
        integral = integral * 10 + (text[i] - '0');
        any_digit = true;
    }

    __int128 frac = 0;
    int frac_digits = 0;
    if (i < text.size() && text[i] == '.') {
        ++i;
        for (; i < text.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(text[i])))
                fail(ErrorKind::data, "malformed amount: " + std::string(text));
            any_digit = true;
            // Digits beyond the 18th are truncated toward zero.
            if (frac_digits < kFracDigits) {
                frac = frac * 10 + (text[i] - '0');
                ++frac_digits;
            }
        }
    }
    if (!any_digit) fail(ErrorKind::data, "malformed amount: " + std::string(text));

    for (int d = frac_digits; d < kFracDigits; ++d) frac *= 10;
    __int128 raw = integral * kScale + frac;
    return from_raw(negative ? -raw : raw);
}

double Amount::to_double() const {
    return static_cast<double>(static_cast<long double>(raw_) / 1e18L);
}

std::string Amount::to_string() const {
    __int128 v = raw_;
    bool negative = v < 0;
    if (negative) v = -v;
    __int128 whole = v / kScale;
    __int128 frac = v % kScale;

    std::string digits;
    if (whole == 0) {
        digits = "0";
    } else {
        while (whole > 0) {
            digits.push_back(static_cast<char>('0' + static_cast<int>(whole % 10)));
            whole /= 10;
        }
        std::reverse(digits.begin(), digits.end());
    }

    std::string out = negative ? "-" + digits : digits;
    if (frac != 0) {
        std::string f(kFracDigits, '0');
        for (int pos = kFracDigits - 1; pos >= 0 && frac > 0; --pos) {
            f[static_cast<std::size_t>(pos)] =
                static_cast<char>('0' + static_cast<int>(frac % 10));
            frac /= 10;
        }
        while (!f.empty() && f.back() == '0') f.pop_back();
        out += "." + f;
    }
    return out;
}

Amount Amount::mul(const Amount& factor, Round mode) const {
    int256 prod = int256(raw_) * int256(factor.raw_);
    int256 scale = int256(kScale);
    int256 q = prod / scale;
    int256 r = prod % scale;
    if (r != 0) {
        switch (mode) {
            case Round::nearest: {
                int256 half = scale / 2;
                if (r >= half) q += 1;
                else if (r <= -half) q -= 1;
                break;
            }
            case Round::down:
                if (prod < 0) q -= 1;  // toward negative infinity
                break;
            case Round::up:
                if (prod > 0) q += 1;  // toward positive infinity
                break;
        }
    }
    static const int256 kRawMax = (int256(1) << 127) - 1;
    if (q > kRawMax || q < -kRawMax)
        fail(ErrorKind::numeric, "amount multiplication overflow");
    return from_raw(static_cast<__int128>(q));
}

Amount min(const Amount& a, const Amount& b) { return a < b ? a : b; }
Amount max(const Amount& a, const Amount& b) { return a > b ? a : b; }

}  // namespace liqguard
