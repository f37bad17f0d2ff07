#pragma once

#include <cstddef>
#include <cstdint>
#include <cmath>
#include <vector>

#include "mipcad/core/error.hpp"

namespace mipcad {

template <typename T>
struct vec3 {
    T x{}, y{}, z{};

    vec3() = default;
    vec3(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}

    T& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    const T& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    friend vec3 operator+(vec3 a, vec3 b) { return {T(a.x + b.x), T(a.y + b.y), T(a.z + b.z)}; }
    friend vec3 operator-(vec3 a, vec3 b) { return {T(a.x - b.x), T(a.y - b.y), T(a.z - b.z)}; }
    friend bool operator==(const vec3& a, const vec3& b) {
        return a.x == b.x && a.y == b.y && a.z == b.z;
    }
};

using vec3d = vec3<double>;
using vec3i = vec3<int>;

inline double length(vec3d v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }

// Dense 2-D array, x fastest.
template <typename T>
class array2d {
public:
    array2d() = default;
    array2d(int nx, int ny, T fill = T{}) : nx_(nx), ny_(ny), data_(size_t(nx) * ny, fill) {}

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int x, int y) { return data_[size_t(y) * nx_ + x]; }
    const T& operator()(int x, int y) const { return data_[size_t(y) * nx_ + x]; }

    bool in_bounds(int x, int y) const { return x >= 0 && x < nx_ && y >= 0 && y < ny_; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    std::vector<T>& raw() { return data_; }
    const std::vector<T>& raw() const { return data_; }

private:
    int nx_ = 0, ny_ = 0;
    std::vector<T> data_;
};

// Dense 3-D array, x fastest, z slowest (z is the slice axis).
template <typename T>
class array3d {
public:
    array3d() = default;
    array3d(int nx, int ny, int nz, T fill = T{})
        : nx_(nx), ny_(ny), nz_(nz), data_(size_t(nx) * ny * nz, fill) {}

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int nz() const { return nz_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int x, int y, int z) { return data_[(size_t(z) * ny_ + y) * nx_ + x]; }
    const T& operator()(int x, int y, int z) const {
        return data_[(size_t(z) * ny_ + y) * nx_ + x];
    }

    bool in_bounds(int x, int y, int z) const {
        return x >= 0 && x < nx_ && y >= 0 && y < ny_ && z >= 0 && z < nz_;
    }

    // View of slice z as a copy-free pointer; slice layout matches array2d.
    T* slice(int z) { return data_.data() + size_t(z) * ny_ * nx_; }
    const T* slice(int z) const { return data_.data() + size_t(z) * ny_ * nx_; }

    array2d<T> slice_copy(int z) const {
        array2d<T> out(nx_, ny_);
        const T* src = slice(z);
        std::copy(src, src + size_t(nx_) * ny_, out.data());
        return out;
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    std::vector<T>& raw() { return data_; }
    const std::vector<T>& raw() const { return data_; }

private:
    int nx_ = 0, ny_ = 0, nz_ = 0;
    std::vector<T> data_;
};

template <typename T, typename U>
bool same_shape(const array3d<T>& a, const array3d<U>& b) {
    return a.nx() == b.nx() && a.ny() == b.ny() && a.nz() == b.nz();
}

}  // namespace mipcad
