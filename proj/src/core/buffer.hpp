#pragma once

#include <cstddef>
#include <new>
#include <vector>

namespace fanet {

/// Allocator with a fixed 64-byte alignment. Vectorized Eigen kernels pick
/// their summation order from the address alignment of the operands, so
/// storage handed to them must not inherit malloc's varying alignment if
/// runs are to be bit-reproducible.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t alignment{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept {
        return true;
    }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

}  // namespace fanet
