#include "dirac_forge/io.hpp"

#include "dirac_forge/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace dirac_forge {

std::string format_double(double x)
{
    if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double parse_double(const Json& v, const std::string& what)
{
    if (v.is_number()) return v.get<double>();
    if (!v.is_string()) throw StructuralError(what + ": expected a number or decimal string");
    const std::string s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s.find('/') != std::string::npos) return parse_rational(s).get_d();
    double out = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw StructuralError(what + ": bad decimal '" + s + "'");
    return out;
}

Json parse_json_text(const std::string& text, const std::string& source)
{
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        std::size_t line = 1, col = 1;
        std::size_t upto = std::min<std::size_t>(e.byte ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < upto; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw StructuralError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                              ": malformed JSON");
    }
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StructuralError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json poly_to_json(const PolyFunction& f)
{
    Json out = Json::array();
    for (const auto& [e, c] : f.terms()) out.push_back({{"coeff", format_rational(c)}, {"exps", e}});
    return out;
}

PolyFunction poly_from_json(const Json& j, std::size_t n_vars)
{
    if (!j.is_array()) throw StructuralError("polynomial must be a list of terms");
    PolyFunction f(n_vars);
    for (const auto& t : j) {
        if (!t.is_object() || !t.contains("coeff") || !t.contains("exps"))
            throw StructuralError("term needs 'coeff' and 'exps'");
        const auto& c = t.at("coeff");
        Rational r = c.is_string() ? parse_rational(c.get<std::string>())
                                   : (c.is_number_integer() ? Rational(c.get<long>()) : rational_from_double(c.get<double>()));
        const auto& ex = t.at("exps");
        if (!ex.is_array() || ex.size() != n_vars)
            throw StructuralError("term has " + std::to_string(ex.is_array() ? ex.size() : 0) + " exponents, expected " +
                                  std::to_string(n_vars));
        PolyFunction::Exponents e;
        for (const auto& v : ex) {
            if (!v.is_number_integer() || v.get<long>() < 0) throw StructuralError("exponents must be non-negative integers");
            e.push_back(v.get<std::uint32_t>());
        }
        f.add_term(std::move(e), r);
    }
    return f;
}

Json matrix_to_json(const Mat& m)
{
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(format_double(m(i, j)));
        rows.push_back(row);
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Mat matrix_from_json(const Json& j)
{
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw StructuralError("matrix needs rows, cols and data");
    auto r = j.at("rows").get<Eigen::Index>(), c = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != r)
        throw StructuralError("matrix data has the wrong number of rows");
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        const auto& row = data[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c)
            throw StructuralError("matrix row " + std::to_string(i) + " has the wrong length");
        for (Eigen::Index k = 0; k < c; ++k) m(i, k) = parse_double(row[static_cast<std::size_t>(k)], "matrix entry");
    }
    return m;
}

Json rational_matrix_to_json(const RationalMatrix& m)
{
    Json rows = Json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        Json row = Json::array();
        for (std::size_t j = 0; j < m.cols; ++j) {
            const Rational& v = m(i, j);
            row.push_back(v.get_den() == 1 ? v.get_num().get_str() : format_rational(v));
        }
        rows.push_back(row);
    }
    return rows;
}

RationalMatrix rational_matrix_from_json(const Json& rows, std::size_t n_rows, std::size_t n_cols)
{
    if (!rows.is_array() || rows.size() != n_rows) throw StructuralError("stage data has the wrong number of rows");
    RationalMatrix m(n_rows, n_cols);
    for (std::size_t i = 0; i < n_rows; ++i) {
        const auto& row = rows[i];
        if (!row.is_array() || row.size() != n_cols)
            throw StructuralError("stage row " + std::to_string(i) + " has the wrong length");
        for (std::size_t j = 0; j < n_cols; ++j) {
            const auto& v = row[j];
            if (v.is_string()) m(i, j) = parse_rational(v.get<std::string>());
            else if (v.is_number_integer()) m(i, j) = Rational(v.get<long>());
            else if (v.is_number()) m(i, j) = rational_from_double(v.get<double>());
            else throw StructuralError("stage entries must be numbers or strings");
        }
    }
    return m;
}

Json system_to_json(const ReducibleSystem& sys)
{
    Json j;
    j["phase_space"] = {{"n_pairs", sys.space.n_pairs}};
    if (!sys.space.names.empty()) j["phase_space"]["names"] = sys.space.names;
    Json cons = Json::array();
    for (const auto& c : sys.chi) cons.push_back(poly_to_json(c));
    j["constraints"] = cons;
    Json red = Json::array();
    for (std::size_t k = 0; k < sys.z_stages.size(); ++k) {
        const auto& z = sys.z_stages[k];
        red.push_back({{"level", k + 1}, {"rows", z.rows}, {"cols", z.cols}, {"data", rational_matrix_to_json(z)}});
    }
    j["reducibility"] = red;
    j["options"] = {{"tol_weak", format_double(sys.tol.tol_weak)},
                    {"tol_rank", format_double(sys.tol.tol_rank)},
                    {"tol_surface", format_double(sys.tol.tol_surface)},
                    {"n_samples", sys.n_samples},
                    {"seed", sys.seed}};
    return j;
}

ReducibleSystem system_from_json(const Json& j)
{
    if (!j.is_object()) throw StructuralError("system must be a JSON object");
    ReducibleSystem sys;
    try {
        const auto& ps = j.at("phase_space");
        auto n = ps.at("n_pairs");
        if (!n.is_number_integer() || n.get<long>() < 0) throw StructuralError("n_pairs must be a non-negative integer");
        sys.space = PhaseSpace(n.get<std::size_t>());
        if (ps.contains("names")) sys.space.names = ps.at("names").get<std::vector<std::string>>();
        for (const auto& c : j.at("constraints")) sys.chi.push_back(poly_from_json(c, sys.space.dim()));
        std::size_t prev = sys.chi.size();
        if (j.contains("reducibility")) {
            std::size_t expect = 1;
            for (const auto& st : j.at("reducibility")) {
                if (st.at("level").get<std::size_t>() != expect)
                    throw StructuralError("reducibility stages must be listed by level starting at 1");
                auto rows = st.at("rows").get<std::size_t>(), cols = st.at("cols").get<std::size_t>();
                if (cols != prev)
                    throw StructuralError("stage " + std::to_string(expect) + " has " + std::to_string(cols) +
                                          " columns, expected " + std::to_string(prev));
                sys.z_stages.push_back(rational_matrix_from_json(st.at("data"), rows, cols));
                prev = rows;
                ++expect;
            }
        }
        if (j.contains("options")) {
            const auto& o = j.at("options");
            if (o.contains("tol_weak")) sys.tol.tol_weak = parse_double(o.at("tol_weak"), "tol_weak");
            if (o.contains("tol_rank")) sys.tol.tol_rank = parse_double(o.at("tol_rank"), "tol_rank");
            if (o.contains("tol_surface")) sys.tol.tol_surface = parse_double(o.at("tol_surface"), "tol_surface");
            if (o.contains("n_samples")) sys.n_samples = o.at("n_samples").get<int>();
            if (o.contains("seed")) sys.seed = o.at("seed").get<std::uint64_t>();
        }
    } catch (const Json::exception& e) {
        throw StructuralError(std::string("system JSON: ") + e.what());
    }
    sys.check_shapes();
    return sys;
}

Json ladder_to_json(const ProjectorLadder& lad)
{
    Json j;
    j["order"] = lad.order;
    Json z = Json::array(), a = Json::array(), d = Json::array();
    for (const auto& m : lad.z) z.push_back(matrix_to_json(m));
    for (const auto& m : lad.abar) a.push_back(matrix_to_json(m));
    for (const auto& m : lad.d) d.push_back(matrix_to_json(m));
    j["z"] = z;
    j["abar"] = a;
    j["d"] = d;
    j["a_top"] = matrix_to_json(lad.a_top);
    j["d_top"] = matrix_to_json(lad.d_top);
    j["d_top_inv"] = matrix_to_json(lad.d_top_inv);
    Json res = Json::object();
    for (const auto& [k, v] : lad.residuals) res[k] = format_double(v);
    j["residuals"] = res;
    return j;
}

ProjectorLadder ladder_from_json(const Json& j)
{
    ProjectorLadder lad;
    try {
        lad.order = j.at("order").get<std::size_t>();
        for (const auto& m : j.at("z")) lad.z.push_back(matrix_from_json(m));
        for (const auto& m : j.at("abar")) lad.abar.push_back(matrix_from_json(m));
        for (const auto& m : j.at("d")) lad.d.push_back(matrix_from_json(m));
        lad.a_top = matrix_from_json(j.at("a_top"));
        lad.d_top = matrix_from_json(j.at("d_top"));
        lad.d_top_inv = matrix_from_json(j.at("d_top_inv"));
        for (const auto& [k, v] : j.at("residuals").items()) lad.residuals[k] = parse_double(v, k);
    } catch (const Json::exception& e) {
        throw StructuralError(std::string("ladder JSON: ") + e.what());
    }
    if (lad.z.size() != lad.order || lad.abar.size() != lad.order)
        throw StructuralError("ladder JSON: stage count does not match the order");
    return lad;
}

Json vector_to_json(const Vec& v)
{
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(format_double(v(i)));
    return a;
}

Vec vector_from_json(const Json& j)
{
    if (!j.is_array()) throw StructuralError("vector must be a list");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_double(j[i], "vector entry");
    return v;
}

}  // namespace dirac_forge
