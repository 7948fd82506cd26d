#include "vibench/problems.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vibench {

using json = nlohmann::json;

namespace {

constexpr char kMagic[8] = {'V', 'I', 'B', 'P', 'R', 'O', 'B', '\0'};
constexpr std::uint32_t kVersion = 1;

static_assert(sizeof(double) == 8, "float64 payloads require 8-byte doubles");

template <class T>
void put_le(std::string& out, T value) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
    }
}

void put_f64(std::string& out, double v) {
    put_le(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <class T>
    T le() {
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }

    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }

    std::string raw(std::size_t len) {
        need(len);
        std::string s = bytes_.substr(pos_, len);
        pos_ += len;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t len) const {
        if (pos_ + len > bytes_.size()) {
            throw Error("problem file: truncated payload");
        }
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

json constants_json(const ProblemConstants& c) {
    json j;
    j["L"] = c.L;
    j["L_i"] = c.L_i;
    j["mu"] = c.mu ? json(*c.mu) : json(nullptr);
    j["rho"] = c.rho ? json(*c.rho) : json(nullptr);
    j["provenance"] = {{"L", to_string(c.L_provenance)},
                       {"L_i", to_string(c.L_i_provenance)},
                       {"mu", to_string(c.mu_provenance)},
                       {"rho", to_string(c.rho_provenance)}};
    j["quasi_strongly_monotone"] = c.quasi_strongly_monotone;
    return j;
}

Provenance provenance_from(const std::string& s) {
    if (s == "closed_form") return Provenance::closed_form;
    if (s == "numerically_certified") return Provenance::numerically_certified;
    if (s == "user_supplied") return Provenance::user_supplied;
    throw Error("problem file: unknown provenance '" + s + "'");
}

ProblemConstants constants_from(const json& j) {
    ProblemConstants c;
    c.L = j.at("L").get<double>();
    c.L_i = j.at("L_i").get<std::vector<double>>();
    if (!j.at("mu").is_null()) c.mu = j.at("mu").get<double>();
    if (!j.at("rho").is_null()) c.rho = j.at("rho").get<double>();
    const auto& p = j.at("provenance");
    c.L_provenance = provenance_from(p.at("L"));
    c.L_i_provenance = provenance_from(p.at("L_i"));
    c.mu_provenance = provenance_from(p.at("mu"));
    c.rho_provenance = provenance_from(p.at("rho"));
    c.quasi_strongly_monotone = j.at("quasi_strongly_monotone").get<bool>();
    return c;
}

}  // namespace

std::string serialize_problem(const FiniteSumProblem& problem) {
    if (!problem.is_affine()) {
        throw Error("only affine problems can be serialized");
    }
    json header;
    header["format"] = "vibench-problem";
    header["id"] = problem.id();
    header["n"] = problem.n();
    header["d"] = problem.dim();
    header["has_solution"] = problem.has_solution();
    header["metadata"] = json::parse(problem.metadata());
    header["constants"] = problem.constants() ? constants_json(*problem.constants()) : json(nullptr);
    header["layout"] = "per component: M row-major (d*d float64 LE), b (d float64 LE); then x* if present";
    const std::string text = header.dump();

    std::string out(kMagic, sizeof(kMagic));
    put_le<std::uint32_t>(out, kVersion);
    put_le<std::uint64_t>(out, text.size());
    out += text;
    const auto d = static_cast<Eigen::Index>(problem.dim());
    for (const auto& c : problem.components()) {
        const AffineMap* m = c.as_affine();
        for (Eigen::Index r = 0; r < d; ++r)
            for (Eigen::Index q = 0; q < d; ++q) put_f64(out, m->matrix(r, q));
        for (Eigen::Index r = 0; r < d; ++r) put_f64(out, m->offset(r));
    }
    if (problem.has_solution()) {
        for (Eigen::Index r = 0; r < d; ++r) put_f64(out, problem.solution()(r));
    }
    return out;
}

namespace {

FiniteSumProblem deserialize_impl(const std::string& bytes) {
    Reader rd(bytes);
    const std::string magic = rd.raw(sizeof(kMagic));
    if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
        throw Error("problem file: bad magic (not a vibench problem)");
    }
    const auto version = rd.le<std::uint32_t>();
    if (version != kVersion) {
        throw Error("problem file: unsupported version " + std::to_string(version));
    }
    const auto len = rd.le<std::uint64_t>();
    json header;
    try {
        header = json::parse(rd.raw(static_cast<std::size_t>(len)));
    } catch (const json::exception& e) {
        throw Error(std::string("problem file: malformed header: ") + e.what());
    }
    const auto n = header.at("n").get<std::size_t>();
    const auto dd = header.at("d").get<std::size_t>();
    if (n == 0 || dd == 0) {
        throw Error("problem file: n and d must be positive");
    }
    // Reject sizes the payload cannot hold before allocating anything.
    if (static_cast<double>(n) * static_cast<double>(dd) * static_cast<double>(dd + 1) * 8.0 >
        static_cast<double>(rd.remaining())) {
        throw Error("problem file: truncated payload");
    }
    const auto d = static_cast<Eigen::Index>(dd);
    std::vector<ComponentOperator> comps;
    comps.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Matrix M(d, d);
        Vector b(d);
        for (Eigen::Index r = 0; r < d; ++r)
            for (Eigen::Index q = 0; q < d; ++q) M(r, q) = rd.f64();
        for (Eigen::Index r = 0; r < d; ++r) b(r) = rd.f64();
        comps.push_back(ComponentOperator::affine(std::move(M), std::move(b)));
    }
    std::optional<Point> sol;
    if (header.at("has_solution").get<bool>()) {
        Vector x(d);
        for (Eigen::Index r = 0; r < d; ++r) x(r) = rd.f64();
        sol = Point(std::move(x));
    }
    if (!rd.done()) {
        throw Error("problem file: trailing bytes after payload");
    }
    std::optional<ProblemConstants> consts;
    if (!header.at("constants").is_null()) {
        consts = constants_from(header.at("constants"));
    }
    FiniteSumProblem::Options opts;
    opts.id = header.at("id").get<std::string>();
    opts.metadata = header.at("metadata").dump();
    return FiniteSumProblem(std::move(comps), std::move(sol), std::move(consts), opts);
}

}  // namespace

FiniteSumProblem deserialize_problem(const std::string& bytes) {
    try {
        return deserialize_impl(bytes);
    } catch (const json::exception& e) {
        throw Error(std::string("problem file: bad header field: ") + e.what());
    }
}

void save_problem(const FiniteSumProblem& problem, const std::string& path) {
    const std::string bytes = serialize_problem(problem);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw Error("cannot open '" + path + "' for writing");
    }
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) {
        throw Error("failed writing '" + path + "'");
    }
}

FiniteSumProblem load_problem(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw Error("cannot open problem file '" + path + "'");
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    return deserialize_problem(ss.str());
}

}  // namespace vibench
