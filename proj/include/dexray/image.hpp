#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace dexray {

struct Bgr {
    std::uint8_t b = 0;
    std::uint8_t g = 0;
    std::uint8_t r = 0;

    friend bool operator==(const Bgr&, const Bgr&) = default;
};

// Hue on the half-degree scale [0,180]; saturation and value in [0,255].
struct Hsv {
    std::uint8_t h = 0;
    std::uint8_t s = 0;
    std::uint8_t v = 0;

    friend bool operator==(const Hsv&, const Hsv&) = default;
};

// Row-major pixel grid, at least 1x1. Coordinates are (row, col) at the
// accessor level; geometry types use x = column, y = row.
template <typename Pixel>
class Grid {
public:
    using value_type = Pixel;

    Grid(int height, int width, Pixel fill = Pixel{})
        : height_(height), width_(width) {
        if (height < 1 || width < 1) throw std::invalid_argument("grid dimensions must be at least 1x1");
        data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
    }

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    Pixel& operator()(int row, int col) { return data_[index(row, col)]; }
    const Pixel& operator()(int row, int col) const { return data_[index(row, col)]; }

    bool contains(int row, int col) const { return row >= 0 && row < height_ && col >= 0 && col < width_; }

    std::span<Pixel> pixels() { return data_; }
    std::span<const Pixel> pixels() const { return data_; }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
    }

    int height_;
    int width_;
    std::vector<Pixel> data_;
};

using RawImage = Grid<Bgr>;
using HsvImage = Grid<Hsv>;

// Binary grid. Cells only ever hold 0 or 1: writes go through set().
class BinaryMask {
public:
    BinaryMask(int height, int width, bool fill = false) : cells_(height, width, fill ? 1 : 0) {}

    int height() const { return cells_.height(); }
    int width() const { return cells_.width(); }

    bool operator()(int row, int col) const { return cells_(row, col) != 0; }
    void set(int row, int col, bool on) { cells_(row, col) = on ? 1 : 0; }

    bool contains(int row, int col) const { return cells_.contains(row, col); }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto c : cells_.pixels()) n += c;
        return n;
    }

    bool empty() const { return count() == 0; }

    std::span<const std::uint8_t> cells() const { return cells_.pixels(); }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    Grid<std::uint8_t> cells_;
};

}  // namespace dexray
