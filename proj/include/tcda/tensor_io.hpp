// SPDX-License-Identifier: Apache-2.0
//
// Target tensor file:
//
//   line 1   JSON header, terminated by '\n'
//            {"format":"tcda-target","version":1,"shape":[I,J,K],
//             "subarray":{"elements":M,"subarray_x":Lx,"subarray_z":Lz},
//             "missing_fraction":f,"rank_hint":R (optional),
//             "data_bytes":16*I*J*K,"mask_bytes":I*J*K}
//   then     I*J*K complex values, first index fastest, each as two
//            little-endian IEEE-754 doubles (re, im)
//   then     I*J*K mask bytes, 0 or 1, same order

#ifndef TCDA_TENSOR_IO_HPP
#define TCDA_TENSOR_IO_HPP

#include "tcda/pipeline.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace tcda
{
    struct TargetFile
    {
        TargetTensorPair pair;
        std::optional<std::size_t> rank_hint;
    };

    void write_target(std::ostream &out, const TargetTensorPair &pair, std::optional<std::size_t> rank_hint = {});
    void write_target_file(const std::string &path, const TargetTensorPair &pair,
                           std::optional<std::size_t> rank_hint = {});

    // Throws ConfigError on any malformed header or payload.
    TargetFile read_target(std::istream &in);
    TargetFile read_target_file(const std::string &path);

} // namespace tcda

#endif // TCDA_TENSOR_IO_HPP
