// SPDX-License-Identifier: Apache-2.0

#include "tcda/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tcda
{
    namespace
    {
        void check_shape(const Shape &shape)
        {
            if (shape.empty())
                throw std::invalid_argument("tensor shape must have at least one mode");
            for (std::size_t m = 0; m < shape.size(); ++m)
                if (shape[m] == 0)
                    throw std::invalid_argument("tensor mode " + std::to_string(m) + " has zero length");
        }

        std::string shape_str(const Shape &s)
        {
            std::string out = "(";
            for (std::size_t m = 0; m < s.size(); ++m)
                out += (m ? "," : "") + std::to_string(s[m]);
            return out + ")";
        }
    } // namespace

    std::size_t shape_numel(const Shape &shape)
    {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
    }

    ComplexTensor::ComplexTensor(Shape shape) : shape_(std::move(shape))
    {
        check_shape(shape_);
        data_.assign(shape_numel(shape_), cplx{0.0, 0.0});
    }

    ComplexTensor::ComplexTensor(Shape shape, std::vector<cplx> data)
        : shape_(std::move(shape)), data_(std::move(data))
    {
        check_shape(shape_);
        if (data_.size() != shape_numel(shape_))
            throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                        " does not match shape " + shape_str(shape_));
    }

    std::size_t ComplexTensor::dim(std::size_t mode) const
    {
        if (mode >= shape_.size())
            throw std::out_of_range("mode " + std::to_string(mode) + " out of range for order " +
                                    std::to_string(shape_.size()));
        return shape_[mode];
    }

    std::size_t ComplexTensor::linear_index(std::span<const std::size_t> idx) const
    {
        if (idx.size() != shape_.size())
            throw std::out_of_range("index has " + std::to_string(idx.size()) + " components, tensor order is " +
                                    std::to_string(shape_.size()));
        std::size_t lin = 0, stride = 1;
        for (std::size_t m = 0; m < shape_.size(); ++m)
        {
            if (idx[m] >= shape_[m])
                throw std::out_of_range("index " + std::to_string(idx[m]) + " out of range for mode " +
                                        std::to_string(m) + " of length " + std::to_string(shape_[m]));
            lin += idx[m] * stride;
            stride *= shape_[m];
        }
        return lin;
    }

    double ComplexTensor::frobenius_norm() const noexcept
    {
        double s = 0.0;
        for (const auto &v : data_)
            s += std::norm(v);
        return std::sqrt(s);
    }

    MaskTensor::MaskTensor(Shape shape, std::uint8_t fill) : shape_(std::move(shape))
    {
        check_shape(shape_);
        bits_.assign(shape_numel(shape_), fill ? 1 : 0);
    }

    MaskTensor::MaskTensor(Shape shape, std::vector<std::uint8_t> bits)
        : shape_(std::move(shape)), bits_(std::move(bits))
    {
        check_shape(shape_);
        if (bits_.size() != shape_numel(shape_))
            throw std::invalid_argument("mask length does not match shape " + shape_str(shape_));
        for (auto b : bits_)
            if (b > 1)
                throw std::invalid_argument("mask entries must be 0 or 1");
    }

    void MaskTensor::set(std::size_t k, bool value)
    {
        bits_.at(k) = value ? 1 : 0;
    }

    std::size_t MaskTensor::observed_count() const noexcept
    {
        return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
    }

    double MaskTensor::missing_fraction() const noexcept
    {
        if (bits_.empty())
            return 0.0;
        return 1.0 - static_cast<double>(observed_count()) / static_cast<double>(bits_.size());
    }

    Shape CPModel::shape() const
    {
        return {static_cast<std::size_t>(G.rows()), static_cast<std::size_t>(H.rows()),
                static_cast<std::size_t>(P.rows())};
    }

    bool CPModel::all_finite() const
    {
        return G.allFinite() && H.allFinite() && P.allFinite();
    }

    ComplexTensor rank1_sum(const CPModel &model)
    {
        return rank1_sum({model.G, model.H, model.P}, model.shape());
    }

    ComplexTensor rank1_sum(const std::vector<FactorMatrix> &factors, const Shape &shape)
    {
        if (factors.size() != shape.size())
            throw std::invalid_argument("rank1_sum: " + std::to_string(factors.size()) + " factors for order-" +
                                        std::to_string(shape.size()) + " shape");
        const auto rank = factors.empty() ? 0 : factors.front().cols();
        for (std::size_t m = 0; m < factors.size(); ++m)
        {
            if (static_cast<std::size_t>(factors[m].rows()) != shape[m])
                throw std::invalid_argument("rank1_sum: factor " + std::to_string(m) + " has " +
                                            std::to_string(factors[m].rows()) + " rows, shape needs " +
                                            std::to_string(shape[m]));
            if (factors[m].cols() != rank)
                throw std::invalid_argument("rank1_sum: factors disagree on column count");
        }

        ComplexTensor out(shape);
        const std::size_t order = shape.size();
        const std::size_t n = out.size();
        std::vector<std::size_t> idx(order, 0);
        for (std::size_t k = 0; k < n; ++k)
        {
            cplx acc{0.0, 0.0};
            for (Eigen::Index r = 0; r < rank; ++r)
            {
                cplx prod = factors[0](static_cast<Eigen::Index>(idx[0]), r);
                for (std::size_t m = 1; m < order; ++m)
                    prod *= factors[m](static_cast<Eigen::Index>(idx[m]), r);
                acc += prod;
            }
            out[k] = acc;
            for (std::size_t m = 0; m < order; ++m)
            {
                if (++idx[m] < shape[m])
                    break;
                idx[m] = 0;
            }
        }
        return out;
    }

    ComplexMatrix unfold_mode1(const ComplexTensor &t)
    {
        if (t.order() != 3)
            throw std::invalid_argument("unfold_mode1 expects an order-3 tensor, got order " +
                                        std::to_string(t.order()));
        const auto rows = static_cast<Eigen::Index>(t.dim(0));
        const auto cols = static_cast<Eigen::Index>(t.dim(1) * t.dim(2));
        // Fastest-first storage is exactly column-major I1 x (I2*I3).
        return Eigen::Map<const ComplexMatrix>(t.data().data(), rows, cols);
    }

    FactorMatrix khatri_rao(const FactorMatrix &a, const FactorMatrix &b)
    {
        if (a.cols() != b.cols())
            throw std::invalid_argument("khatri_rao: column counts differ (" + std::to_string(a.cols()) + " vs " +
                                        std::to_string(b.cols()) + ")");
        FactorMatrix out(a.rows() * b.rows(), a.cols());
        for (Eigen::Index r = 0; r < a.cols(); ++r)
            for (Eigen::Index i = 0; i < a.rows(); ++i)
                out.col(r).segment(i * b.rows(), b.rows()) = a(i, r) * b.col(r);
        return out;
    }

    Eigen::VectorXcd kron(const Eigen::VectorXcd &a, const Eigen::VectorXcd &b)
    {
        Eigen::VectorXcd out(a.size() * b.size());
        for (Eigen::Index i = 0; i < a.size(); ++i)
            out.segment(i * b.size(), b.size()) = a(i) * b;
        return out;
    }

    namespace
    {
        void check_partition(std::size_t order, const ModeGroups &groups)
        {
            std::vector<int> seen(order, 0);
            for (const auto &g : groups)
            {
                if (g.empty())
                    throw std::invalid_argument("merge_modes: empty mode group");
                for (auto m : g)
                {
                    if (m >= order)
                        throw std::invalid_argument("merge_modes: mode " + std::to_string(m) +
                                                    " out of range for order " + std::to_string(order));
                    if (seen[m]++)
                        throw std::invalid_argument("merge_modes: mode " + std::to_string(m) +
                                                    " appears in more than one group");
                }
            }
            for (std::size_t m = 0; m < order; ++m)
                if (!seen[m])
                    throw std::invalid_argument("merge_modes: mode " + std::to_string(m) + " not covered by groups");
        }

        Shape merged_shape(const Shape &shape, const ModeGroups &groups)
        {
            Shape out;
            for (const auto &g : groups)
            {
                std::size_t len = 1;
                for (auto m : g)
                    len *= shape[m];
                out.push_back(len);
            }
            return out;
        }
    } // namespace

    std::vector<std::size_t> merge_index_map(const Shape &shape, const ModeGroups &groups)
    {
        check_partition(shape.size(), groups);

        // Output stride contributed by each input mode.
        std::vector<std::size_t> out_stride(shape.size(), 0);
        std::size_t group_stride = 1;
        for (const auto &g : groups)
        {
            std::size_t inner = 1;
            for (auto m : g)
            {
                out_stride[m] = group_stride * inner;
                inner *= shape[m];
            }
            group_stride *= inner;
        }

        const std::size_t n = shape_numel(shape);
        std::vector<std::size_t> map(n);
        std::vector<std::size_t> idx(shape.size(), 0);
        for (std::size_t k = 0; k < n; ++k)
        {
            std::size_t target = 0;
            for (std::size_t m = 0; m < shape.size(); ++m)
                target += idx[m] * out_stride[m];
            map[target] = k;
            for (std::size_t m = 0; m < shape.size(); ++m)
            {
                if (++idx[m] < shape[m])
                    break;
                idx[m] = 0;
            }
        }
        return map;
    }

    ComplexTensor merge_modes(const ComplexTensor &t, const ModeGroups &groups)
    {
        const auto map = merge_index_map(t.shape(), groups);
        std::vector<cplx> data(map.size());
        for (std::size_t k = 0; k < map.size(); ++k)
            data[k] = t[map[k]];
        return ComplexTensor(merged_shape(t.shape(), groups), std::move(data));
    }

    ComplexTensor split_modes(const ComplexTensor &merged, const ModeGroups &groups, const Shape &original_shape)
    {
        const auto map = merge_index_map(original_shape, groups);
        if (merged.shape() != merged_shape(original_shape, groups))
            throw std::invalid_argument("split_modes: merged shape " + shape_str(merged.shape()) +
                                        " is inconsistent with original shape " + shape_str(original_shape));
        std::vector<cplx> data(map.size());
        for (std::size_t k = 0; k < map.size(); ++k)
            data[map[k]] = merged[k];
        return ComplexTensor(original_shape, std::move(data));
    }

    ComplexTensor reverse_conjugate(const ComplexTensor &t)
    {
        // Reversing every mode maps linear index k to numel-1-k.
        const std::size_t n = t.size();
        std::vector<cplx> data(n);
        for (std::size_t k = 0; k < n; ++k)
            data[k] = std::conj(t[n - 1 - k]);
        return ComplexTensor(t.shape(), std::move(data));
    }

    ComplexTensor hadamard(const ComplexTensor &a, const ComplexTensor &b)
    {
        if (a.shape() != b.shape())
            throw std::invalid_argument("hadamard: shape mismatch " + shape_str(a.shape()) + " vs " +
                                        shape_str(b.shape()));
        ComplexTensor out(a.shape());
        for (std::size_t k = 0; k < a.size(); ++k)
            out[k] = a[k] * b[k];
        return out;
    }

    ComplexTensor hadamard(const ComplexTensor &a, const MaskTensor &w)
    {
        if (a.shape() != w.shape())
            throw std::invalid_argument("hadamard: shape mismatch " + shape_str(a.shape()) + " vs mask " +
                                        shape_str(w.shape()));
        ComplexTensor out(a.shape());
        for (std::size_t k = 0; k < a.size(); ++k)
            out[k] = w[k] ? a[k] : cplx{0.0, 0.0};
        return out;
    }

} // namespace tcda
