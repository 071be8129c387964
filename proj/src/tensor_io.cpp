// SPDX-License-Identifier: Apache-2.0

#include "tcda/tensor_io.hpp"

#include "tcda/scenario.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace tcda
{
    using nlohmann::json;

    namespace
    {
        constexpr const char *kFormat = "tcda-target";
        constexpr int kVersion = 1;

        void put_le(std::ostream &out, double x)
        {
            auto bits = std::bit_cast<std::uint64_t>(x);
            std::array<char, 8> b;
            for (auto &c : b)
            {
                c = static_cast<char>(bits & 0xff);
                bits >>= 8;
            }
            out.write(b.data(), 8);
        }

        double get_le(const unsigned char *p)
        {
            std::uint64_t bits = 0;
            for (int i = 7; i >= 0; --i)
                bits = (bits << 8) | p[i];
            return std::bit_cast<double>(bits);
        }

        std::size_t header_uint(const json &h, const char *key)
        {
            auto it = h.find(key);
            if (it == h.end() || !it->is_number_unsigned())
                throw ConfigError(std::string("header.") + key, "missing or not a non-negative integer");
            return it->get<std::size_t>();
        }
    } // namespace

    void write_target(std::ostream &out, const TargetTensorPair &pair, std::optional<std::size_t> rank_hint)
    {
        const auto &t = pair.t_obs;
        if (pair.mask.shape() != t.shape())
            throw std::invalid_argument("write_target: mask shape does not match tensor shape");
        json h;
        h["format"] = kFormat;
        h["version"] = kVersion;
        h["shape"] = t.shape();
        h["subarray"] = {{"elements", pair.config.elements},
                         {"subarray_x", pair.config.lx1},
                         {"subarray_z", pair.config.lz1}};
        h["missing_fraction"] = pair.missing_fraction;
        if (rank_hint)
            h["rank_hint"] = *rank_hint;
        h["data_bytes"] = 16 * t.size();
        h["mask_bytes"] = t.size();
        out << h.dump() << '\n';
        for (std::size_t k = 0; k < t.size(); ++k)
        {
            put_le(out, t[k].real());
            put_le(out, t[k].imag());
        }
        for (std::size_t k = 0; k < t.size(); ++k)
            out.put(pair.mask[k] ? 1 : 0);
        if (!out)
            throw std::runtime_error("write_target: stream error");
    }

    void write_target_file(const std::string &path, const TargetTensorPair &pair, std::optional<std::size_t> rank_hint)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot open " + path + " for writing");
        write_target(out, pair, rank_hint);
    }

    TargetFile read_target(std::istream &in)
    {
        std::string line;
        if (!std::getline(in, line))
            throw ConfigError("header", "missing header line");
        json h;
        try
        {
            h = json::parse(line);
        }
        catch (const json::parse_error &e)
        {
            throw ConfigError("header", std::string("malformed JSON header: ") + e.what());
        }
        if (!h.is_object())
            throw ConfigError("header", "header is not a JSON object");
        if (h.value("format", std::string{}) != kFormat)
            throw ConfigError("header.format", std::string("expected \"") + kFormat + "\"");
        if (h.value("version", 0) != kVersion)
            throw ConfigError("header.version", "unsupported version");

        auto sh = h.find("shape");
        if (sh == h.end() || !sh->is_array() || sh->size() != 3)
            throw ConfigError("header.shape", "expected three dimensions");
        Shape shape;
        for (const auto &d : *sh)
        {
            if (!d.is_number_unsigned() || d.get<std::size_t>() == 0)
                throw ConfigError("header.shape", "dimensions must be positive integers");
            shape.push_back(d.get<std::size_t>());
        }

        auto sa = h.find("subarray");
        if (sa == h.end() || !sa->is_object())
            throw ConfigError("header.subarray", "missing subarray configuration");
        SubarrayConfig cfg;
        cfg.elements = header_uint(*sa, "elements");
        cfg.lx1 = header_uint(*sa, "subarray_x");
        cfg.lz1 = header_uint(*sa, "subarray_z");
        try
        {
            cfg.validate();
        }
        catch (const std::invalid_argument &e)
        {
            throw ConfigError("header.subarray", e.what());
        }
        if (cfg.target_shape() != shape)
            throw ConfigError("header.shape", "shape does not match the subarray configuration");

        const std::size_t n = shape_numel(shape);
        if (header_uint(h, "data_bytes") != 16 * n || header_uint(h, "mask_bytes") != n)
            throw ConfigError("header", "payload sizes do not match the shape");

        TargetFile out;
        if (auto r = h.find("rank_hint"); r != h.end())
        {
            if (!r->is_number_unsigned() || r->get<std::size_t>() == 0)
                throw ConfigError("header.rank_hint", "expected a positive integer");
            out.rank_hint = r->get<std::size_t>();
        }

        std::vector<unsigned char> payload(17 * n);
        in.read(reinterpret_cast<char *>(payload.data()), static_cast<std::streamsize>(payload.size()));
        if (static_cast<std::size_t>(in.gcount()) != payload.size())
            throw ConfigError("payload", "file is truncated");
        if (in.peek() != std::char_traits<char>::eof())
            throw ConfigError("payload", "trailing bytes after the mask");

        std::vector<cplx> data(n);
        for (std::size_t k = 0; k < n; ++k)
        {
            data[k] = {get_le(&payload[16 * k]), get_le(&payload[16 * k + 8])};
            if (!std::isfinite(data[k].real()) || !std::isfinite(data[k].imag()))
                throw ConfigError("payload", "non-finite value at linear index " + std::to_string(k));
        }
        std::vector<std::uint8_t> bits(payload.begin() + static_cast<std::ptrdiff_t>(16 * n), payload.end());
        for (auto b : bits)
            if (b > 1)
                throw ConfigError("payload", "mask bytes must be 0 or 1");

        out.pair.t_obs = ComplexTensor(shape, std::move(data));
        out.pair.mask = MaskTensor(shape, std::move(bits));
        out.pair.config = cfg;
        out.pair.missing_fraction = out.pair.mask.missing_fraction();
        return out;
    }

    TargetFile read_target_file(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw ConfigError("", "cannot open " + path);
        return read_target(in);
    }

} // namespace tcda
