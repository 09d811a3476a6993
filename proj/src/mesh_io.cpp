#include <lbbp/errors.hpp>
#include <lbbp/mesh_io.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

namespace lbbp {

namespace {

std::string lowercase(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string strip_comment(const std::string& line)
{
    const auto pos = line.find('#');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

bool is_blank(const std::string& line)
{
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

/// Next non-empty, comment-stripped line; false at end of stream.
bool next_content_line(std::istream& in, std::string& line)
{
    std::string raw;
    while (std::getline(in, raw)) {
        line = strip_comment(raw);
        if (!is_blank(line)) return true;
    }
    return false;
}

class MeshBuilder
{
public:
    void add_vertex(double x, double y, double z) { m_points.push_back({x, y, z}); }

    void add_polygon(const std::vector<long long>& poly, std::size_t line_hint)
    {
        if (poly.size() < 3) {
            throw ParseError("polygon with fewer than 3 vertices near line " + std::to_string(line_hint));
        }
        for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
            m_triangles.push_back({poly[0], poly[i], poly[i + 1]});
        }
    }

    TriangleMesh build(MeshOptions options) const
    {
        const auto n = static_cast<long long>(m_points.size());
        Vertices V(m_points.size(), 3);
        for (std::size_t i = 0; i < m_points.size(); ++i) {
            V.row(static_cast<Eigen::Index>(i)) << m_points[i][0], m_points[i][1], m_points[i][2];
        }
        Faces F(m_triangles.size(), 3);
        for (std::size_t f = 0; f < m_triangles.size(); ++f) {
            for (int c = 0; c < 3; ++c) {
                const long long v = m_triangles[f][c];
                if (v < 0 || v >= n) {
                    throw ParseError(
                        "face " + std::to_string(f) + " references vertex " + std::to_string(v) + " but only " +
                        std::to_string(n) + " vertices were declared");
                }
                F(static_cast<Eigen::Index>(f), c) = static_cast<int>(v);
            }
        }
        return TriangleMesh(std::move(V), std::move(F), options);
    }

private:
    std::vector<std::array<double, 3>> m_points;
    std::vector<std::array<long long, 3>> m_triangles;
};

template <typename T>
T parse_number(std::istringstream& ss, const char* what)
{
    T value{};
    if (!(ss >> value)) throw ParseError(std::string("expected ") + what);
    return value;
}

std::ifstream open_input(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return in;
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << std::setprecision(17);
    return out;
}

} // namespace

std::optional<MeshFormat> format_from_extension(const std::filesystem::path& path)
{
    const std::string ext = lowercase(path.extension().string());
    if (ext == ".off") return MeshFormat::OFF;
    if (ext == ".obj") return MeshFormat::OBJ;
    if (ext == ".ply") return MeshFormat::PLY;
    return std::nullopt;
}

TriangleMesh read_off(std::istream& in, MeshOptions options)
{
    std::string line;
    if (!next_content_line(in, line)) throw ParseError("empty OFF file");
    std::istringstream header(line);
    std::string magic;
    header >> magic;
    if (magic.size() < 3 || magic.substr(magic.size() - 3) != "OFF") {
        throw ParseError("missing OFF header");
    }
    if (magic != "OFF") throw ParseError("unsupported OFF variant '" + magic + "'");

    // Counts may follow the magic on the same line.
    long long nv = -1, nf = -1;
    if (!(header >> nv)) {
        if (!next_content_line(in, line)) throw ParseError("missing OFF counts");
        std::istringstream counts(line);
        nv = parse_number<long long>(counts, "vertex count");
        nf = parse_number<long long>(counts, "face count");
    } else {
        nf = parse_number<long long>(header, "face count");
    }
    if (nv < 0 || nf < 0) throw ParseError("negative OFF counts");

    MeshBuilder builder;
    for (long long i = 0; i < nv; ++i) {
        if (!next_content_line(in, line)) throw ParseError("truncated OFF vertex list");
        std::istringstream ss(line);
        const double x = parse_number<double>(ss, "vertex x");
        const double y = parse_number<double>(ss, "vertex y");
        const double z = parse_number<double>(ss, "vertex z");
        builder.add_vertex(x, y, z);
    }
    for (long long f = 0; f < nf; ++f) {
        if (!next_content_line(in, line)) throw ParseError("truncated OFF face list");
        std::istringstream ss(line);
        const long long count = parse_number<long long>(ss, "polygon size");
        std::vector<long long> poly(static_cast<std::size_t>(std::max(0LL, count)));
        for (auto& v : poly) v = parse_number<long long>(ss, "polygon index");
        builder.add_polygon(poly, static_cast<std::size_t>(f));
    }
    return builder.build(options);
}

TriangleMesh read_obj(std::istream& in, MeshOptions options)
{
    MeshBuilder builder;
    long long vertex_count = 0;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = strip_comment(raw);
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        if (tag == "v") {
            const double x = parse_number<double>(ss, "vertex x");
            const double y = parse_number<double>(ss, "vertex y");
            const double z = parse_number<double>(ss, "vertex z");
            builder.add_vertex(x, y, z);
            ++vertex_count;
        } else if (tag == "f") {
            std::vector<long long> poly;
            std::string token;
            while (ss >> token) {
                // v, v/vt, v//vn, v/vt/vn
                const std::string head = token.substr(0, token.find('/'));
                long long idx = 0;
                const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
                if (ec != std::errc() || ptr != head.data() + head.size() || idx == 0) {
                    throw ParseError("bad OBJ face index '" + token + "' on line " + std::to_string(line_no));
                }
                poly.push_back(idx > 0 ? idx - 1 : vertex_count + idx);
            }
            builder.add_polygon(poly, line_no);
        }
    }
    return builder.build(options);
}

TriangleMesh read_ply(std::istream& in, MeshOptions options)
{
    std::string line;
    if (!std::getline(in, line) || lowercase(line).rfind("ply", 0) != 0) throw ParseError("missing PLY magic");

    struct Element
    {
        std::string name;
        long long count = 0;
        std::vector<std::string> properties;
        bool has_list = false;
    };
    std::vector<Element> elements;
    bool ascii = false;
    while (true) {
        if (!std::getline(in, line)) throw ParseError("unterminated PLY header");
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        if (word == "format") {
            std::string kind;
            ss >> kind;
            if (kind != "ascii") throw ParseError("only ASCII PLY is supported (got '" + kind + "')");
            ascii = true;
        } else if (word == "element") {
            Element e;
            ss >> e.name;
            e.count = parse_number<long long>(ss, "element count");
            elements.push_back(e);
        } else if (word == "property") {
            if (elements.empty()) throw ParseError("PLY property before element");
            std::string type;
            ss >> type;
            if (type == "list") {
                std::string count_type, item_type, name;
                ss >> count_type >> item_type >> name;
                elements.back().properties.push_back(name);
                elements.back().has_list = true;
            } else {
                std::string name;
                ss >> name;
                elements.back().properties.push_back(name);
            }
        } else if (word == "end_header") {
            break;
        }
    }
    if (!ascii) throw ParseError("PLY format line missing");

    MeshBuilder builder;
    for (const Element& e : elements) {
        if (e.name == "vertex") {
            const auto find = [&](const char* name) {
                const auto it = std::find(e.properties.begin(), e.properties.end(), name);
                if (it == e.properties.end()) throw ParseError(std::string("PLY vertex lacks property ") + name);
                return static_cast<std::size_t>(it - e.properties.begin());
            };
            const std::size_t ix = find("x"), iy = find("y"), iz = find("z");
            for (long long i = 0; i < e.count; ++i) {
                if (!next_content_line(in, line)) throw ParseError("truncated PLY vertex list");
                std::istringstream ss(line);
                std::vector<double> values;
                double v = 0.0;
                while (ss >> v) values.push_back(v);
                if (values.size() < e.properties.size()) throw ParseError("short PLY vertex record");
                builder.add_vertex(values[ix], values[iy], values[iz]);
            }
        } else if (e.name == "face") {
            if (!e.has_list) throw ParseError("PLY face element without index list");
            for (long long f = 0; f < e.count; ++f) {
                if (!next_content_line(in, line)) throw ParseError("truncated PLY face list");
                std::istringstream ss(line);
                const long long count = parse_number<long long>(ss, "polygon size");
                std::vector<long long> poly(static_cast<std::size_t>(std::max(0LL, count)));
                for (auto& v : poly) v = parse_number<long long>(ss, "polygon index");
                builder.add_polygon(poly, static_cast<std::size_t>(f));
            }
        } else {
            for (long long i = 0; i < e.count; ++i) {
                if (!next_content_line(in, line)) throw ParseError("truncated PLY element '" + e.name + "'");
            }
        }
    }
    return builder.build(options);
}

TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format, MeshOptions options)
{
    auto in = open_input(path);
    switch (format) {
    case MeshFormat::OFF: return read_off(in, options);
    case MeshFormat::OBJ: return read_obj(in, options);
    case MeshFormat::PLY: return read_ply(in, options);
    }
    throw ParseError("unknown mesh format");
}

TriangleMesh load_mesh(const std::filesystem::path& path, MeshOptions options)
{
    const auto format = format_from_extension(path);
    if (!format) throw ParseError("cannot infer mesh format from '" + path.string() + "'");
    return load_mesh(path, *format, options);
}

void write_off(std::ostream& out, const TriangleMesh& mesh)
{
    out << std::setprecision(17);
    out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_faces() << " 0\n";
    const auto& V = mesh.vertices();
    for (int i = 0; i < mesh.num_vertices(); ++i) {
        out << V(i, 0) << ' ' << V(i, 1) << ' ' << V(i, 2) << '\n';
    }
    const auto& F = mesh.faces();
    for (int f = 0; f < mesh.num_faces(); ++f) {
        out << "3 " << F(f, 0) << ' ' << F(f, 1) << ' ' << F(f, 2) << '\n';
    }
}

void save_off(const std::filesystem::path& path, const TriangleMesh& mesh)
{
    auto out = open_output(path);
    write_off(out, mesh);
}

IndexPairs read_index_pairs(std::istream& in)
{
    IndexPairs pairs;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = strip_comment(raw);
        if (is_blank(line)) continue;
        std::istringstream ss(line);
        long long a = 0, b = 0;
        std::string extra;
        if (!(ss >> a >> b) || (ss >> extra) || a < 0 || b < 0 || a > INT32_MAX || b > INT32_MAX) {
            throw ParseError("expected 'src tgt' on line " + std::to_string(line_no));
        }
        pairs.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
    return pairs;
}

IndexPairs load_index_pairs(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return read_index_pairs(in);
}

void write_index_pairs(std::ostream& out, const IndexPairs& pairs)
{
    for (const auto& [a, b] : pairs) out << a << ' ' << b << '\n';
}

void save_index_pairs(const std::filesystem::path& path, const IndexPairs& pairs)
{
    auto out = open_output(path);
    write_index_pairs(out, pairs);
}

Eigen::VectorXd load_scalars(const std::filesystem::path& path)
{
    auto in = open_input(path);
    std::vector<double> values;
    std::string line;
    while (next_content_line(in, line)) {
        std::istringstream ss(line);
        double v = 0.0;
        if (!(ss >> v)) throw ParseError("bad scalar in '" + path.string() + "'");
        values.push_back(v);
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void save_scalars(const std::filesystem::path& path, const Eigen::VectorXd& values)
{
    auto out = open_output(path);
    for (Eigen::Index i = 0; i < values.size(); ++i) out << values[i] << '\n';
}

} // namespace lbbp
