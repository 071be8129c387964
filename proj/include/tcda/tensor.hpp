// SPDX-License-Identifier: Apache-2.0
//
// Dense complex tensor kernel.
//
// Linearization convention (used everywhere in this library): the first
// mode varies fastest. For shape (I1, I2, I3) the entry (i1, i2, i3) lives at
// i1 + i2*I1 + i3*I1*I2 (0-based). The same rule applies to Kronecker and
// Khatri-Rao products (second operand fastest) and to merged modes (first
// listed mode fastest), so that the mode-1 unfolding of a CP model reads
// T_(1) = G * khatri_rao(P, H)^T.

#ifndef TCDA_TENSOR_HPP
#define TCDA_TENSOR_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace tcda
{
    using cplx = std::complex<double>;
    using Shape = std::vector<std::size_t>;

    // Factor matrices (I x R) and unfoldings are plain column-major Eigen matrices.
    using FactorMatrix = Eigen::MatrixXcd;
    using ComplexMatrix = Eigen::MatrixXcd;

    std::size_t shape_numel(const Shape &shape);

    class ComplexTensor
    {
    public:
        ComplexTensor() = default;

        // Zero-filled tensor. Every mode length must be positive.
        explicit ComplexTensor(Shape shape);
        ComplexTensor(Shape shape, std::vector<cplx> data);

        const Shape &shape() const noexcept { return shape_; }
        std::size_t order() const noexcept { return shape_.size(); }
        std::size_t size() const noexcept { return data_.size(); }
        std::size_t dim(std::size_t mode) const;

        std::span<const cplx> data() const noexcept { return data_; }
        std::span<cplx> data() noexcept { return data_; }

        // Bounds-checked multi-index access (0-based).
        std::size_t linear_index(std::span<const std::size_t> idx) const;
        cplx &at(std::span<const std::size_t> idx) { return data_[linear_index(idx)]; }
        const cplx &at(std::span<const std::size_t> idx) const { return data_[linear_index(idx)]; }
        cplx &operator()(std::initializer_list<std::size_t> idx)
        {
            return at(std::span<const std::size_t>(idx.begin(), idx.size()));
        }
        const cplx &operator()(std::initializer_list<std::size_t> idx) const
        {
            return at(std::span<const std::size_t>(idx.begin(), idx.size()));
        }

        // Unchecked linear access.
        cplx &operator[](std::size_t k) noexcept { return data_[k]; }
        const cplx &operator[](std::size_t k) const noexcept { return data_[k]; }

        double frobenius_norm() const noexcept;

        bool operator==(const ComplexTensor &other) const = default;

    private:
        Shape shape_;
        std::vector<cplx> data_;
    };

    // Binary reliability indicator with the same linearization as ComplexTensor.
    class MaskTensor
    {
    public:
        MaskTensor() = default;
        MaskTensor(Shape shape, std::uint8_t fill);
        MaskTensor(Shape shape, std::vector<std::uint8_t> bits);

        const Shape &shape() const noexcept { return shape_; }
        std::size_t size() const noexcept { return bits_.size(); }
        std::span<const std::uint8_t> bits() const noexcept { return bits_; }

        bool operator[](std::size_t k) const noexcept { return bits_[k] != 0; }
        void set(std::size_t k, bool value);

        std::size_t observed_count() const noexcept;
        // 1 - mean(w)
        double missing_fraction() const noexcept;

        bool operator==(const MaskTensor &other) const = default;

    private:
        Shape shape_;
        std::vector<std::uint8_t> bits_;
    };

    // Third-order CP model [[G, H, P]].
    struct CPModel
    {
        FactorMatrix G;
        FactorMatrix H;
        FactorMatrix P;

        Eigen::Index rank() const noexcept { return G.cols(); }
        Shape shape() const;
        bool all_finite() const;
    };

    // Sum over r of the outer product of column r of every factor. factors[m]
    // must have shape[m] rows and a common column count.
    ComplexTensor rank1_sum(const std::vector<FactorMatrix> &factors, const Shape &shape);
    ComplexTensor rank1_sum(const CPModel &model);

    // I1 x (I2*I3), column index i2 + i3*I2.
    ComplexMatrix unfold_mode1(const ComplexTensor &t);

    // Column r is kron(a_r, b_r); row index j + i*J (b fastest).
    FactorMatrix khatri_rao(const FactorMatrix &a, const FactorMatrix &b);

    // Kronecker product of two vectors, b fastest.
    Eigen::VectorXcd kron(const Eigen::VectorXcd &a, const Eigen::VectorXcd &b);

    using ModeGroups = std::vector<std::vector<std::size_t>>;

    // Merges the modes of each group (0-based mode ids) into one mode; the first
    // listed member of a group varies fastest in the merged index.
    ComplexTensor merge_modes(const ComplexTensor &t, const ModeGroups &groups);

    // Inverse of merge_modes given the original shape and the same groups.
    ComplexTensor split_modes(const ComplexTensor &merged, const ModeGroups &groups,
                              const Shape &original_shape);

    // Index map of merge_modes: position k of the result holds the linear input
    // index that lands at merged linear index k.
    std::vector<std::size_t> merge_index_map(const Shape &shape, const ModeGroups &groups);

    // out(i1..id) = conj(t(I1-1-i1, ..., Id-1-id)).
    ComplexTensor reverse_conjugate(const ComplexTensor &t);

    ComplexTensor hadamard(const ComplexTensor &a, const ComplexTensor &b);
    ComplexTensor hadamard(const ComplexTensor &a, const MaskTensor &w);

} // namespace tcda

#endif // TCDA_TENSOR_HPP
