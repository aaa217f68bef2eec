#include "dexray/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dexray/errors.hpp"

namespace dexray::imaging {

StructuringElement::StructuringElement(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("structuring element size must be positive");
}

Hsv bgr_to_hsv(const Bgr& p) {
    const int b = p.b, g = p.g, r = p.r;
    const int v = std::max({b, g, r});
    const int mn = std::min({b, g, r});
    const int delta = v - mn;

    Hsv out;
    out.v = static_cast<std::uint8_t>(v);
    out.s = v == 0 ? 0 : static_cast<std::uint8_t>(std::lround(255.0 * delta / v));
    if (delta == 0) return out;

    double degrees;
    if (v == r)
        degrees = 60.0 * (g - b) / delta;
    else if (v == g)
        degrees = 120.0 + 60.0 * (b - r) / delta;
    else
        degrees = 240.0 + 60.0 * (r - g) / delta;
    if (degrees < 0.0) degrees += 360.0;
    out.h = static_cast<std::uint8_t>(std::lround(degrees / 2.0));
    return out;
}

Bgr hsv_to_bgr(const Hsv& p) {
    const double degrees = std::fmod(p.h * 2.0, 360.0);
    const double v = p.v / 255.0;
    const double chroma = v * (p.s / 255.0);
    const double sector = degrees / 60.0;
    const double x = chroma * (1.0 - std::fabs(std::fmod(sector, 2.0) - 1.0));
    const double m = v - chroma;

    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(sector)) {
        case 0: r = chroma; g = x; break;
        case 1: r = x; g = chroma; break;
        case 2: g = chroma; b = x; break;
        case 3: g = x; b = chroma; break;
        case 4: r = x; b = chroma; break;
        default: r = chroma; b = x; break;
    }
    auto to8 = [m](double c) {
        return static_cast<std::uint8_t>(std::clamp(std::lround((c + m) * 255.0), 0L, 255L));
    };
    return Bgr{to8(b), to8(g), to8(r)};
}

HsvImage bgr_to_hsv(const RawImage& image) {
    HsvImage out(image.height(), image.width());
    auto src = image.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = bgr_to_hsv(src[i]);
    return out;
}

RawImage hsv_to_bgr(const HsvImage& image) {
    RawImage out(image.height(), image.width());
    auto src = image.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = hsv_to_bgr(src[i]);
    return out;
}

BinaryMask in_range(const HsvImage& image, const HsvBounds& bounds) {
    BinaryMask mask(image.height(), image.width());
    for (int r = 0; r < image.height(); ++r)
        for (int c = 0; c < image.width(); ++c) mask.set(r, c, bounds.contains(image(r, c)));
    return mask;
}

namespace {

// One axis of a separable rectangular operator. For each cell, looks at the
// window [i - before, i + after] along the axis. all_set = true computes an
// AND with out-of-range cells counting as 0; otherwise an OR over in-range cells.
BinaryMask sweep(const BinaryMask& in, int before, int after, bool along_rows, bool all_set) {
    const int h = in.height(), w = in.width();
    const int lines = along_rows ? h : w;
    const int len = along_rows ? w : h;
    BinaryMask out(h, w);
    std::vector<int> prefix(static_cast<std::size_t>(len) + 1);

    for (int line = 0; line < lines; ++line) {
        for (int i = 0; i < len; ++i) {
            const bool on = along_rows ? in(line, i) : in(i, line);
            prefix[i + 1] = prefix[i] + (on ? 1 : 0);
        }
        for (int i = 0; i < len; ++i) {
            bool on;
            if (all_set) {
                const int lo = i - before, hi = i + after;
                on = lo >= 0 && hi < len && prefix[hi + 1] - prefix[lo] == hi - lo + 1;
            } else {
                const int lo = std::max(0, i - before), hi = std::min(len - 1, i + after);
                on = prefix[hi + 1] - prefix[lo] > 0;
            }
            if (along_rows)
                out.set(line, i, on);
            else
                out.set(i, line, on);
        }
    }
    return out;
}

}  // namespace

BinaryMask erode(const BinaryMask& mask, const StructuringElement& se) {
    const int before = se.anchor();
    const int after = se.size() - 1 - se.anchor();
    return sweep(sweep(mask, before, after, true, true), before, after, false, true);
}

BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se) {
    // Reflected footprint: offsets [-(n-1-a), a].
    const int before = se.size() - 1 - se.anchor();
    const int after = se.anchor();
    return sweep(sweep(mask, before, after, true, false), before, after, false, false);
}

BinaryMask close(const BinaryMask& mask, const StructuringElement& se) {
    return erode(dilate(mask, se), se);
}

BinaryMask complement(const BinaryMask& mask) {
    BinaryMask out(mask.height(), mask.width());
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c) out.set(r, c, !mask(r, c));
    return out;
}

Centroid centroid(const BinaryMask& mask) {
    std::int64_t sum_r = 0, sum_c = 0, n = 0;
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c)
            if (mask(r, c)) {
                sum_r += r;
                sum_c += c;
                ++n;
            }
    if (n == 0) throw EmptyMask();
    return Centroid{static_cast<double>(sum_c) / static_cast<double>(n),
                    static_cast<double>(sum_r) / static_cast<double>(n)};
}

Rect bounding_rect(const BinaryMask& mask) {
    int min_r = mask.height(), max_r = -1, min_c = mask.width(), max_c = -1;
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c)
            if (mask(r, c)) {
                min_r = std::min(min_r, r);
                max_r = std::max(max_r, r);
                min_c = std::min(min_c, c);
                max_c = std::max(max_c, c);
            }
    if (max_r < 0) throw EmptyMask();
    return Rect{min_c, min_r, max_c - min_c + 1, max_r - min_r + 1};
}

template <ColourPixel P>
Grid<P> pad(const Grid<P>& image, int top, int bottom, int left, int right) {
    if (top < 0 || bottom < 0 || left < 0 || right < 0) throw std::invalid_argument("negative pad amount");
    Grid<P> out(image.height() + top + bottom, image.width() + left + right, whitespace<P>());
    for (int r = 0; r < image.height(); ++r)
        for (int c = 0; c < image.width(); ++c) out(r + top, c + left) = image(r, c);
    return out;
}

template <ColourPixel P>
Grid<P> crop(const Grid<P>& image, const Rect& window) {
    if (window.w < 1 || window.h < 1 || window.x < 0 || window.y < 0 || window.x + window.w > image.width() ||
        window.y + window.h > image.height()) {
        throw OutOfBounds("crop window {" + std::to_string(window.x) + "," + std::to_string(window.y) + "," +
                          std::to_string(window.w) + "," + std::to_string(window.h) + "} exceeds " +
                          std::to_string(image.height()) + "x" + std::to_string(image.width()) + " image");
    }
    Grid<P> out(window.h, window.w);
    for (int r = 0; r < window.h; ++r)
        for (int c = 0; c < window.w; ++c) out(r, c) = image(window.y + r, window.x + c);
    return out;
}

namespace {

template <ColourPixel P>
std::array<double, 3> channels(const P& p) {
    if constexpr (std::same_as<P, Bgr>)
        return {double(p.b), double(p.g), double(p.r)};
    else
        return {double(p.h), double(p.s), double(p.v)};
}

template <ColourPixel P>
P from_channels(const std::array<double, 3>& c) {
    auto q = [](double v, long hi) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, hi)); };
    if constexpr (std::same_as<P, Bgr>)
        return Bgr{q(c[0], 255), q(c[1], 255), q(c[2], 255)};
    else
        return Hsv{q(c[0], 180), q(c[1], 255), q(c[2], 255)};
}

struct Tap {
    int lo;
    int hi;
    double frac;
};

// Half-pixel-centre source coordinate for each destination index.
std::vector<Tap> taps(int src_len, int dst_len) {
    std::vector<Tap> out(static_cast<std::size_t>(dst_len));
    const double scale = static_cast<double>(src_len) / dst_len;
    for (int i = 0; i < dst_len; ++i) {
        double s = (i + 0.5) * scale - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(src_len - 1));
        const int lo = static_cast<int>(std::floor(s));
        out[i] = Tap{lo, std::min(lo + 1, src_len - 1), s - lo};
    }
    return out;
}

}  // namespace

template <ColourPixel P>
Grid<P> resize(const Grid<P>& image, int height, int width) {
    if (height < 1 || width < 1) throw std::invalid_argument("resize target must be at least 1x1");
    if (height == image.height() && width == image.width()) return image;

    const auto ty = taps(image.height(), height);
    const auto tx = taps(image.width(), width);
    Grid<P> out(height, width);
    for (int r = 0; r < height; ++r) {
        const Tap& y = ty[r];
        for (int c = 0; c < width; ++c) {
            const Tap& x = tx[c];
            const auto p00 = channels(image(y.lo, x.lo));
            const auto p01 = channels(image(y.lo, x.hi));
            const auto p10 = channels(image(y.hi, x.lo));
            const auto p11 = channels(image(y.hi, x.hi));
            std::array<double, 3> v{};
            for (int k = 0; k < 3; ++k) {
                const double top = (1.0 - x.frac) * p00[k] + x.frac * p01[k];
                const double bottom = (1.0 - x.frac) * p10[k] + x.frac * p11[k];
                v[k] = (1.0 - y.frac) * top + y.frac * bottom;
            }
            out(r, c) = from_channels<P>(v);
        }
    }
    return out;
}

template <ColourPixel P>
Grid<P> resize(const Grid<P>& image, Scale factor) {
    if (factor.num < 1 || factor.den < 1) throw std::invalid_argument("scale factor must be positive");
    const auto h = static_cast<long long>(image.height()) * factor.num / factor.den;
    const auto w = static_cast<long long>(image.width()) * factor.num / factor.den;
    return resize(image, static_cast<int>(h), static_cast<int>(w));
}

template <ColourPixel P>
Grid<P> shorter_side_crop(const Grid<P>& image, int target) {
    if (target < 1) throw std::invalid_argument("crop target must be positive");
    const long long h = image.height(), w = image.width();
    const long long shorter = std::min(h, w);
    // Longer side scaled by target/shorter, rounded half up in integers.
    auto scaled = [&](long long side) { return (2 * side * target + shorter) / (2 * shorter); };
    const int new_h = h == shorter ? target : static_cast<int>(scaled(h));
    const int new_w = h == shorter ? static_cast<int>(scaled(w)) : target;

    const Grid<P> scaled_image = resize(image, new_h, new_w);
    return crop(scaled_image, Rect{(new_w - target) / 2, (new_h - target) / 2, target, target});
}

template Grid<Bgr> pad(const Grid<Bgr>&, int, int, int, int);
template Grid<Hsv> pad(const Grid<Hsv>&, int, int, int, int);
template Grid<Bgr> crop(const Grid<Bgr>&, const Rect&);
template Grid<Hsv> crop(const Grid<Hsv>&, const Rect&);
template Grid<Bgr> resize(const Grid<Bgr>&, int, int);
template Grid<Hsv> resize(const Grid<Hsv>&, int, int);
template Grid<Bgr> resize(const Grid<Bgr>&, Scale);
template Grid<Hsv> resize(const Grid<Hsv>&, Scale);
template Grid<Bgr> shorter_side_crop(const Grid<Bgr>&, int);
template Grid<Hsv> shorter_side_crop(const Grid<Hsv>&, int);

}  // namespace dexray::imaging
