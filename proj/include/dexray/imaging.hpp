#pragma once

#include <concepts>
#include <cstdint>

#include "dexray/image.hpp"

namespace dexray::imaging {

// Inclusive per-channel box in HSV space.
struct HsvBounds {
    Hsv lower;
    Hsv upper;

    bool contains(const Hsv& p) const {
        return p.h >= lower.h && p.h <= upper.h && p.s >= lower.s && p.s <= upper.s && p.v >= lower.v &&
               p.v <= upper.v;
    }

    // Component-wise lower <= upper and H within [0,180].
    bool valid() const {
        return lower.h <= upper.h && lower.s <= upper.s && lower.v <= upper.v && upper.h <= 180;
    }

    bool intersects(const HsvBounds& o) const {
        return lower.h <= o.upper.h && o.lower.h <= upper.h && lower.s <= o.upper.s && o.lower.s <= upper.s &&
               lower.v <= o.upper.v && o.lower.v <= upper.v;
    }

    bool contains(const HsvBounds& o) const { return contains(o.lower) && contains(o.upper); }

    friend bool operator==(const HsvBounds&, const HsvBounds&) = default;
};

// Metallic response band used by the bounding pipeline.
inline constexpr HsvBounds kMetallicBand{{90, 100, 100}, {180, 255, 255}};

// n x n all-ones footprint anchored at (n/2, n/2). For even n the anchor sits
// below and right of the geometric centre, e.g. (5,5) for n = 10.
class StructuringElement {
public:
    explicit StructuringElement(int n);

    int size() const { return n_; }
    int anchor() const { return n_ / 2; }

    friend bool operator==(const StructuringElement&, const StructuringElement&) = default;

private:
    int n_;
};

// Axis-aligned rectangle, x = column, y = row.
struct Rect {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;

    int right() const { return x + w - 1; }
    int bottom() const { return y + h - 1; }
    bool contains(int row, int col) const { return col >= x && col <= right() && row >= y && row <= bottom(); }

    friend bool operator==(const Rect&, const Rect&) = default;
};

struct Centroid {
    double cx = 0.0;  // column
    double cy = 0.0;  // row

    friend bool operator==(const Centroid&, const Centroid&) = default;
};

template <typename P>
concept ColourPixel = std::same_as<P, Bgr> || std::same_as<P, Hsv>;

// White in either colour space.
template <ColourPixel P>
constexpr P whitespace() {
    if constexpr (std::same_as<P, Bgr>)
        return Bgr{255, 255, 255};
    else
        return Hsv{0, 0, 255};
}

// Positive rational scale factor num/den.
struct Scale {
    int num = 1;
    int den = 1;

    friend bool operator==(const Scale&, const Scale&) = default;
};

Hsv bgr_to_hsv(const Bgr& p);
Bgr hsv_to_bgr(const Hsv& p);

HsvImage bgr_to_hsv(const RawImage& image);
RawImage hsv_to_bgr(const HsvImage& image);

BinaryMask in_range(const HsvImage& image, const HsvBounds& bounds);

// Zero outside the image for both operators. Erosion keeps a cell when every
// cell of the footprint placed at it is set. Dilation is the Minkowski sum,
// i.e. it sets a cell when the reflected footprint hits a set cell; for odd n
// the two footprints coincide.
BinaryMask erode(const BinaryMask& mask, const StructuringElement& se);
BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se);

// erode(dilate(mask, se), se)
BinaryMask close(const BinaryMask& mask, const StructuringElement& se);

BinaryMask complement(const BinaryMask& mask);

// Throws EmptyMask when no cell is set.
Centroid centroid(const BinaryMask& mask);
Rect bounding_rect(const BinaryMask& mask);

template <ColourPixel P>
Grid<P> pad(const Grid<P>& image, int top, int bottom, int left, int right);

// Throws OutOfBounds unless window lies inside the image.
template <ColourPixel P>
Grid<P> crop(const Grid<P>& image, const Rect& window);

// Bilinear, half-pixel centres, edge samples clamped. Throws
// std::invalid_argument for targets below 1x1.
template <ColourPixel P>
Grid<P> resize(const Grid<P>& image, int height, int width);

// Target is (floor(h*num/den), floor(w*num/den)).
template <ColourPixel P>
Grid<P> resize(const Grid<P>& image, Scale factor);

// Uniform scale so the shorter side equals target, then centre-crop the
// longer side. Output is target x target.
template <ColourPixel P>
Grid<P> shorter_side_crop(const Grid<P>& image, int target);

}  // namespace dexray::imaging
