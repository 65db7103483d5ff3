#ifndef NK_REPORT_HPP
#define NK_REPORT_HPP

#include "nk/hypothesis.hpp"
#include "nk/kernel.hpp"
#include "nk/newton.hpp"
#include "nk/poly.hpp"
#include "nk/rational.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nk {

using Json = nlohmann::ordered_json;

inline constexpr const char* artifact_version = "0.1.0";
inline constexpr int report_schema_version = 1;

inline std::string sha256_hex(std::string_view data)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::filesystem::path& p, std::string_view content)
{
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + p.string());
    out << content;
    if (!out)
        throw std::runtime_error("write failed for " + p.string());
}

inline Json rational_json(const Rational& r) { return to_fraction_string(r); }

inline Json exponent_json(const Exponent& e) { return Json(e); }

inline Json face_json(const NewtonPolyhedron& np, const Face& f)
{
    Json verts = Json::array();
    for (auto v : f.member_vertices)
        verts.push_back(exponent_json(np.vertices[v]));
    return Json{{"dim", f.dim}, {"vertices", verts}, {"recession_axes", f.recession_axes}};
}

/// The analyze document: polyhedron, invariants and compact faces, rationals as "p/q".
inline Json newton_report(const MultiPoly& p, const NewtonPolyhedron& np)
{
    const InvariantsSummary s = invariants(np);
    Json verts = Json::array();
    for (const auto& v : np.vertices)
        verts.push_back(exponent_json(v));
    Json facets = Json::array();
    for (const auto& f : np.facets) {
        Json normal = Json::array();
        for (const auto& c : f.normal)
            normal.push_back(rational_json(c));
        facets.push_back(Json{{"normal", normal}, {"offset", rational_json(f.offset)}});
    }
    Json compact = Json::array();
    for (const auto& f : compact_faces(np))
        compact.push_back(face_json(np, f));
    return Json{{"poly", format_poly(p)},
                {"nvars", p.nvars()},
                {"vertices", verts},
                {"facets", facets},
                {"newton_distance", rational_json(s.distance)},
                {"delta0", rational_json(s.delta0)},
                {"central_face", face_json(np, s.central_face)},
                {"multiplicity", s.multiplicity},
                {"compact_faces", compact}};
}

inline Json hypothesis_json(const HypothesisReport& r, const HypothesisOptions& opt)
{
    Json faces = Json::array();
    for (const auto& f : r.faces) {
        Json verts = Json::array();
        for (const auto& v : f.vertices)
            verts.push_back(exponent_json(v));
        faces.push_back(Json{{"face_index", f.face_index},
                             {"vertices", verts},
                             {"zero_count", f.zero_count},
                             {"max_order", f.max_order},
                             {"pass", f.pass},
                             {"orthant_zero_counts", f.orthant_zero_counts},
                             {"orthant_max_orders", f.orthant_max_orders},
                             {"zeros", f.zeros}});
    }
    return Json{{"newton_distance", rational_json(r.distance)},
                {"pass", r.pass},
                {"nonvanishing", r.nonvanishing},
                {"budget_exhausted", r.budget_exhausted},
                {"line_zero_bound", r.line_zero_bound},
                {"evaluations", r.evaluations},
                {"samples", opt.samples},
                {"seed", opt.seed},
                {"faces", faces}};
}

inline Json piece_bounds_json(const KernelPiece& p, const PieceBounds& b)
{
    Json alphas = Json::array();
    for (const auto& [a, v] : b.per_alpha)
        alphas.push_back(Json{{"alpha", a}, {"sup", v}});
    return Json{{"j", p.j()},  {"C_23", b.C_23},     {"C_24", b.C_24},       {"C_213", b.C_213},
                {"per_alpha", alphas}, {"points", b.points}, {"skipped", b.skipped}};
}

/// Plain CSV: a header row then one row per record, numbers at full precision.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(const std::vector<double>& row)
    {
        if (row.size() != header_.size())
            throw std::invalid_argument("CSV row has wrong width");
        rows_.push_back(row);
    }

    std::string str() const
    {
        std::ostringstream os;
        os << std::setprecision(17);
        for (std::size_t i = 0; i < header_.size(); ++i)
            os << (i ? "," : "") << header_[i];
        os << "\n";
        for (const auto& r : rows_) {
            for (std::size_t i = 0; i < r.size(); ++i)
                os << (i ? "," : "") << r[i];
            os << "\n";
        }
        return os.str();
    }

    std::size_t size() const { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<double>> rows_;
};

/// Manifest entry for a written file.
inline Json file_entry(const std::filesystem::path& dir, const std::string& name)
{
    return Json{{"path", name}, {"sha256", sha256_hex(read_file(dir / name))}};
}

/// Recomputes every checksum listed in a manifest; returns the names that differ.
inline std::vector<std::string> verify_manifest(const std::filesystem::path& dir, const Json& manifest)
{
    std::vector<std::string> bad;
    for (const auto& f : manifest.at("files")) {
        const std::string name = f.at("path");
        std::error_code ec;
        if (!std::filesystem::exists(dir / name, ec) || sha256_hex(read_file(dir / name)) != f.at("sha256"))
            bad.push_back(name);
    }
    return bad;
}

} // namespace nk

#endif
