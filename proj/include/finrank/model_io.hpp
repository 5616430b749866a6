#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "finrank/matrix_measure.hpp"
#include "finrank/perturbation.hpp"

namespace finrank {

using Json = nlohmann::json;

/// 17-significant-digit decimal, round-trip safe for doubles.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// FNV-1a 64-bit over a byte string; used to stamp reports with a model hash.
inline std::string fnv1a64_hex(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace detail {

inline Json matrix_part_to_json(const Matrix& m, bool imag) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            arr.push_back(imag ? m(i, j).imag() : m(i, j).real());
    return arr;
}

inline Matrix matrix_from_parts(const Json& re, const Json& im, Eigen::Index rows,
                                Eigen::Index cols, const char* what) {
    if (!re.is_array() || !im.is_array() ||
        re.size() != static_cast<std::size_t>(rows * cols) ||
        im.size() != static_cast<std::size_t>(rows * cols))
        throw Error(std::string(what) + ": expected row-major arrays of length rows*cols");
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j, ++k)
            m(i, j) = Complex(re[k].get<double>(), im[k].get<double>());
    return m;
}

}  // namespace detail

inline Json model_to_json(const Hermitian& a, const Matrix& b, const std::string& label = "") {
    Json j;
    j["n"] = a.dim();
    j["d"] = b.cols();
    j["A_re"] = detail::matrix_part_to_json(a.mat(), false);
    j["A_im"] = detail::matrix_part_to_json(a.mat(), true);
    j["B_re"] = detail::matrix_part_to_json(b, false);
    j["B_im"] = detail::matrix_part_to_json(b, true);
    if (!label.empty()) j["label"] = label;
    return j;
}

struct LoadedModel {
    PerturbationModel model;
    std::string label;
    std::string hash;  ///< FNV-1a of the canonical serialized form
};

/// Parses a ModelFile. With require_cyclic the load fails for non-cyclic
/// Ran B (the ModelFile contract); verify loads permissively so the
/// negative-control suites can run.
inline LoadedModel model_from_json(const Json& j, const Tolerances& tol = {},
                                   bool require_cyclic = true) {
    for (const char* key : {"n", "d", "A_re", "A_im", "B_re", "B_im"})
        if (!j.contains(key)) throw Error(std::string("ModelFile: missing field ") + key);
    const auto n = j["n"].get<Eigen::Index>();
    const auto d = j["d"].get<Eigen::Index>();
    if (n < 1 || d < 1) throw Error("ModelFile: n and d must be positive");
    const Matrix a = detail::matrix_from_parts(j["A_re"], j["A_im"], n, n, "ModelFile A");
    const Matrix b = detail::matrix_from_parts(j["B_re"], j["B_im"], n, d, "ModelFile B");
    std::string label = j.contains("label") ? j["label"].get<std::string>() : "";
    PerturbationModel model{Hermitian(a), b, tol, require_cyclic};
    const std::string canonical = model_to_json(model.a(), model.b(), label).dump();
    return {std::move(model), std::move(label), fnv1a64_hex(canonical)};
}

inline void save_model_file(const std::string& path, const Hermitian& a, const Matrix& b,
                            const std::string& label = "") {
    std::ofstream out(path);
    if (!out) throw Error("save_model_file: cannot open " + path);
    out << model_to_json(a, b, label).dump(2) << "\n";
}

inline LoadedModel load_model_file(const std::string& path, const Tolerances& tol = {},
                                   bool require_cyclic = true) {
    std::ifstream in(path);
    if (!in) throw Error("load_model_file: cannot open " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(std::string("load_model_file: parse error: ") + e.what());
    }
    return model_from_json(j, tol, require_cyclic);
}

/// nu specification: JSON list of {"x": real, "mass": real > 0}.
inline ScalarMeasure nu_from_json(const Json& j, const Tolerances& tol = {}) {
    if (!j.is_array()) throw Error("nu: expected a JSON array of {x, mass}");
    std::vector<ScalarAtom> atoms;
    atoms.reserve(j.size());
    for (const auto& item : j) {
        if (!item.contains("x") || !item.contains("mass"))
            throw Error("nu: each entry needs fields x and mass");
        const double mass = item["mass"].get<double>();
        if (!(mass > 0.0)) throw Error("nu: mass must be > 0");
        atoms.push_back({item["x"].get<double>(), mass});
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const ScalarAtom& a, const ScalarAtom& b) { return a.location < b.location; });
    return ScalarMeasure(std::move(atoms), {}, tol);
}

inline Json nu_to_json(const ScalarMeasure& nu) {
    Json arr = Json::array();
    for (const auto& a : nu.atoms()) arr.push_back({{"x", a.location}, {"mass", a.mass}});
    return arr;
}

inline ScalarMeasure load_nu_file(const std::string& path, const Tolerances& tol = {}) {
    std::ifstream in(path);
    if (!in) throw Error("load_nu_file: cannot open " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(std::string("load_nu_file: parse error: ") + e.what());
    }
    return nu_from_json(j, tol);
}

inline Json tolerances_to_json(const Tolerances& tol) {
    return Json{{"eig_residual", tol.eig_residual},
                {"rank_rel", tol.rank_rel},
                {"atom_merge", tol.atom_merge}};
}

}  // namespace finrank
