#include "uvbody/tensor_io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

namespace uvbody {

namespace {

constexpr char kMagic[4] = {'U', 'V', 'B', '1'};

// little-endian scalar IO; the build targets little-endian hosts and the
// format is defined little-endian, so memcpy is exact
template <typename T>
void put(std::string& buf, T v) {
    char tmp[sizeof(T)];
    std::memcpy(tmp, &v, sizeof(T));
    buf.append(tmp, sizeof(T));
}

template <typename T>
T take(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("tensor load: truncated stream");
    return v;
}

std::array<uint32_t, 256> make_crc_table() {
    std::array<uint32_t, 256> table{};
    for (uint32_t i = 0; i < 256; ++i) {
        uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
    return table;
}

}  // namespace

uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed) {
    static const std::array<uint32_t, 256> table = make_crc_table();
    uint32_t c = seed ^ 0xFFFFFFFFu;
    for (size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

size_t elem_size(ElemType t) {
    switch (t) {
        case ElemType::f32: return 4;
        case ElemType::f64: return 8;
        case ElemType::u8: return 1;
        case ElemType::boolean: return 1;
    }
    throw std::runtime_error("tensor: unknown element type");
}

uint64_t Tensor::element_count() const {
    uint64_t n = 1;
    for (uint64_t d : dims) n *= d;
    return n;
}

Tensor Tensor::f64(const std::vector<uint64_t>& dims, const double* data) {
    Tensor t;
    t.type = ElemType::f64;
    t.dims = dims;
    t.raw.resize(t.element_count() * 8);
    std::memcpy(t.raw.data(), data, t.raw.size());
    return t;
}

Tensor Tensor::f64(const MatX& m) {
    // emit row-major regardless of Eigen's storage order
    std::vector<double> rowmajor(static_cast<size_t>(m.rows()) * m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            rowmajor[static_cast<size_t>(r) * m.cols() + c] = m(r, c);
    return f64({static_cast<uint64_t>(m.rows()), static_cast<uint64_t>(m.cols())}, rowmajor.data());
}

Tensor Tensor::f64(const VecX& v) {
    return f64({static_cast<uint64_t>(v.size())}, v.data());
}

Tensor Tensor::grid(const Grid& g) {
    return f64({static_cast<uint64_t>(g.height), static_cast<uint64_t>(g.width),
                static_cast<uint64_t>(g.channels)},
               g.data.data());
}

Tensor Tensor::mask(const MaskGrid& m) {
    Tensor t;
    t.type = ElemType::boolean;
    t.dims = {static_cast<uint64_t>(m.height), static_cast<uint64_t>(m.width)};
    t.raw = m.data;
    return t;
}

Tensor Tensor::bytes(const std::vector<uint64_t>& dims, const std::vector<uint8_t>& data) {
    Tensor t;
    t.type = ElemType::u8;
    t.dims = dims;
    t.raw = data;
    if (t.raw.size() != t.element_count())
        throw std::invalid_argument("tensor: byte payload does not match dims");
    return t;
}

std::vector<double> Tensor::as_f64() const {
    if (type != ElemType::f64) throw std::runtime_error("tensor: expected f64 data");
    std::vector<double> out(element_count());
    std::memcpy(out.data(), raw.data(), raw.size());
    return out;
}

MatX Tensor::as_matrix() const {
    if (dims.size() != 2) throw std::runtime_error("tensor: expected rank 2");
    auto vals = as_f64();
    MatX m(dims[0], dims[1]);
    for (uint64_t r = 0; r < dims[0]; ++r)
        for (uint64_t c = 0; c < dims[1]; ++c) m(r, c) = vals[r * dims[1] + c];
    return m;
}

VecX Tensor::as_vector() const {
    if (dims.size() != 1) throw std::runtime_error("tensor: expected rank 1");
    auto vals = as_f64();
    return Eigen::Map<const VecX>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

Grid Tensor::as_grid() const {
    if (dims.size() != 3) throw std::runtime_error("tensor: expected rank 3");
    Grid g(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]));
    auto vals = as_f64();
    g.data = std::move(vals);
    return g;
}

MaskGrid Tensor::as_mask() const {
    if (type != ElemType::boolean || dims.size() != 2)
        throw std::runtime_error("tensor: expected rank-2 bool data");
    MaskGrid m(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
    m.data = raw;
    return m;
}

void save_tensor(std::ostream& os, const Tensor& t) {
    if (t.raw.size() != t.element_count() * elem_size(t.type))
        throw std::invalid_argument("tensor save: payload size does not match dims");
    std::string buf;
    buf.append(kMagic, 4);
    put<uint8_t>(buf, static_cast<uint8_t>(t.type));
    put<uint8_t>(buf, static_cast<uint8_t>(t.dims.size()));
    for (uint64_t d : t.dims) put<uint64_t>(buf, d);
    buf.append(reinterpret_cast<const char*>(t.raw.data()), t.raw.size());
    uint32_t crc = crc32(reinterpret_cast<const uint8_t*>(buf.data()), buf.size());
    put<uint32_t>(buf, crc);
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

Tensor load_tensor(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is) throw std::runtime_error("tensor load: truncated stream");
    if (std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("tensor load: bad magic");

    std::string checked(magic, 4);
    auto track = [&checked](auto v) {
        char tmp[sizeof(v)];
        std::memcpy(tmp, &v, sizeof(v));
        checked.append(tmp, sizeof(v));
        return v;
    };

    Tensor t;
    uint8_t type_code = track(take<uint8_t>(is));
    if (type_code > 3) throw std::runtime_error("tensor load: unknown element type");
    t.type = static_cast<ElemType>(type_code);
    uint8_t rank = track(take<uint8_t>(is));
    t.dims.resize(rank);
    for (int i = 0; i < rank; ++i) t.dims[i] = track(take<uint64_t>(is));

    uint64_t payload = t.element_count() * elem_size(t.type);
    t.raw.resize(payload);
    is.read(reinterpret_cast<char*>(t.raw.data()), static_cast<std::streamsize>(payload));
    if (!is) throw std::runtime_error("tensor load: truncated payload");
    checked.append(reinterpret_cast<const char*>(t.raw.data()), t.raw.size());

    uint32_t stored = take<uint32_t>(is);
    uint32_t computed = crc32(reinterpret_cast<const uint8_t*>(checked.data()), checked.size());
    if (stored != computed) throw std::runtime_error("tensor load: crc mismatch");
    return t;
}

std::string archive_to_string(const TensorMap& tensors) {
    std::ostringstream os(std::ios::binary);
    for (const auto& [name, tensor] : tensors) {
        std::string buf;
        put<uint32_t>(buf, static_cast<uint32_t>(name.size()));
        buf += name;
        os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        save_tensor(os, tensor);
    }
    return os.str();
}

TensorMap archive_from_string(const std::string& bytes) {
    std::istringstream is(bytes, std::ios::binary);
    TensorMap out;
    while (is.peek() != EOF) {
        uint32_t len = take<uint32_t>(is);
        std::string name(len, '\0');
        is.read(name.data(), len);
        if (!is) throw std::runtime_error("archive load: truncated name");
        out[name] = load_tensor(is);
    }
    return out;
}

void save_archive(const std::string& path, const TensorMap& tensors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("archive save: cannot open " + path);
    std::string bytes = archive_to_string(tensors);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::runtime_error("archive save: write failed for " + path);
}

TensorMap load_archive(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("archive load: cannot open " + path);
    std::ostringstream ss(std::ios::binary);
    ss << is.rdbuf();
    return archive_from_string(ss.str());
}

const Tensor& require_tensor(const TensorMap& m, const std::string& name) {
    auto it = m.find(name);
    if (it == m.end()) throw std::runtime_error("archive: missing tensor '" + name + "'");
    return it->second;
}

std::string export_obj(const MatX& vertices, const Eigen::MatrixXi& faces) {
    std::string out;
    char line[128];
    for (Eigen::Index i = 0; i < vertices.rows(); ++i) {
        std::snprintf(line, sizeof(line), "v %.9g %.9g %.9g\n", vertices(i, 0), vertices(i, 1),
                      vertices(i, 2));
        out += line;
    }
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
        std::snprintf(line, sizeof(line), "f %d %d %d\n", faces(f, 0) + 1, faces(f, 1) + 1,
                      faces(f, 2) + 1);
        out += line;
    }
    return out;
}

void write_obj(const std::string& path, const MatX& vertices, const Eigen::MatrixXi& faces) {
    write_text_file(path, export_obj(vertices, faces));
}

void write_pgm(const std::string& path, const MaskGrid& mask) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("pgm: cannot open " + path);
    os << "P5\n" << mask.width << " " << mask.height << "\n255\n";
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) os.put(mask.at(y, x) ? char(255) : char(0));
}

void write_ppm_indexed(const std::string& path, const std::vector<int>& ids, int height, int width) {
    if (ids.size() != static_cast<size_t>(height) * width)
        throw std::invalid_argument("ppm: id buffer does not match resolution");
    static const uint8_t palette[16][3] = {
        {230, 25, 75},  {60, 180, 75},   {255, 225, 25}, {0, 130, 200},  {245, 130, 48},
        {145, 30, 180}, {70, 240, 240},  {240, 50, 230}, {210, 245, 60}, {250, 190, 212},
        {0, 128, 128},  {220, 190, 255}, {170, 110, 40}, {255, 250, 200}, {128, 0, 0},
        {170, 255, 195}};
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("ppm: cannot open " + path);
    os << "P6\n" << width << " " << height << "\n255\n";
    for (int id : ids) {
        if (id < 0) {
            os.put(0).put(0).put(0);
        } else {
            const uint8_t* c = palette[id % 16];
            os.put(char(c[0])).put(char(c[1])).put(char(c[2]));
        }
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!os) throw std::runtime_error("write failed for " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace uvbody
