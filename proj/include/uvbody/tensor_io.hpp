#pragma once

#include "uvbody/types.hpp"

#include <iosfwd>
#include <map>
#include <string>

namespace uvbody {

enum class ElemType : uint8_t { f32 = 0, f64 = 1, u8 = 2, boolean = 3 };

size_t elem_size(ElemType t);

/// Binary tensor: magic "UVB1", element type code, rank, dims, row-major
/// little-endian payload, trailing CRC32 over everything before it.
struct Tensor {
    ElemType type = ElemType::f64;
    std::vector<uint64_t> dims;
    std::vector<uint8_t> raw;

    uint64_t element_count() const;

    static Tensor f64(const std::vector<uint64_t>& dims, const double* data);
    static Tensor f64(const MatX& m);             // 2-D
    static Tensor f64(const VecX& v);             // 1-D
    static Tensor grid(const Grid& g);            // H x W x C
    static Tensor mask(const MaskGrid& m);        // bool H x W
    static Tensor bytes(const std::vector<uint64_t>& dims, const std::vector<uint8_t>& data);

    std::vector<double> as_f64() const;
    MatX as_matrix() const;
    VecX as_vector() const;
    Grid as_grid() const;
    MaskGrid as_mask() const;
    const std::vector<uint8_t>& as_bytes() const { return raw; }
};

uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed = 0);

void save_tensor(std::ostream& os, const Tensor& t);
/// Throws with distinct messages for bad magic, truncation and CRC mismatch.
Tensor load_tensor(std::istream& is);

/// Archive of named tensors: a sequence of [name length u32][name][tensor].
/// Keys are written in sorted order, so saving is deterministic.
using TensorMap = std::map<std::string, Tensor>;

void save_archive(const std::string& path, const TensorMap& tensors);
TensorMap load_archive(const std::string& path);
std::string archive_to_string(const TensorMap& tensors);
TensorMap archive_from_string(const std::string& bytes);

const Tensor& require_tensor(const TensorMap& m, const std::string& name);

/// Wavefront OBJ text: "v x y z" lines then 1-based "f a b c" lines.
std::string export_obj(const MatX& vertices, const Eigen::MatrixXi& faces);
void write_obj(const std::string& path, const MatX& vertices, const Eigen::MatrixXi& faces);

/// Binary PGM (single channel) of a boolean mask.
void write_pgm(const std::string& path, const MaskGrid& mask);

/// Binary PPM with a fixed palette for small non-negative ids; negative ids
/// render black.
void write_ppm_indexed(const std::string& path, const std::vector<int>& ids, int height, int width);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace uvbody
