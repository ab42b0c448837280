#include "ebla/cpe.hpp"
#include "ebla/harness.hpp"

#include <charconv>
#include <cstdio>
#include <map>

namespace ebla::harness {

namespace {

template <class Int>
bool parse_int(const std::string& s, Int& out) {
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end && !s.empty();
}

std::string format_share(double x, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
    return buf;
}

}  // namespace

ClassifyResult classify_rols(const CsvTable& input, std::optional<Rol> truthful_order) {
    const int c_score = input.column("priority_score"), c_rol = input.column("rol"), c_count = input.column("count");
    if (c_score < 0 || c_rol < 0 || c_count < 0)
        throw InputError("classify input needs columns priority_score, rol, count");

    ClassifyResult result;
    std::map<long long, TrmShare> shares;
    for (std::size_t k = 0; k < input.rows.size(); ++k) {
        const auto& row = input.rows[k];
        const std::string where = "line " + std::to_string(k < input.lines.size() ? input.lines[k] : static_cast<int>(k + 2));
        ClassifiedRow out;
        long long score = 0;
        if (!parse_int(row[static_cast<std::size_t>(c_score)], score))
            throw InputError(where + ": priority_score must be an integer");
        out.priority_score = std::to_string(score);
        try {
            out.rol = Rol::from_digits(row[static_cast<std::size_t>(c_rol)]);
        } catch (const std::exception& e) {
            throw InputError(where + ": malformed ROL '" + row[static_cast<std::size_t>(c_rol)] + "': " + e.what());
        }
        if (result.num_schools == 0) result.num_schools = out.rol.size();
        if (out.rol.size() != result.num_schools)
            throw InputError(where + ": ROL length " + std::to_string(out.rol.size()) + " differs from " +
                             std::to_string(result.num_schools));
        if (!parse_int(row[static_cast<std::size_t>(c_count)], out.count))
            throw InputError(where + ": count must be a nonnegative integer");

        if (result.truthful_order.size() == 0) {
            result.truthful_order = truthful_order ? *truthful_order : Rol::identity(result.num_schools);
            if (result.truthful_order.size() != result.num_schools)
                throw InputError("truthful order length differs from the ROLs");
        }
        out.is_truthful = out.rol == result.truthful_order;
        out.is_trm = is_top_rank_monotone(out.rol, result.truthful_order).is_trm;

        auto& s = shares[score];
        s.priority_score = out.priority_score;
        s.total += out.count;
        result.overall.total += out.count;
        if (out.is_trm) {
            s.trm += out.count;
            result.overall.trm += out.count;
        }
        result.rows.push_back(std::move(out));
    }
    result.overall.priority_score = "all";
    for (auto& [score, s] : shares) result.per_score.push_back(s);
    return result;
}

CsvTable classified_csv(const ClassifyResult& result) {
    CsvTable t;
    t.header = {"priority_score", "rol", "count", "is_truthful", "is_trm"};
    for (const auto& r : result.rows)
        t.rows.push_back({r.priority_score, r.rol.to_string(), std::to_string(r.count), r.is_truthful ? "1" : "0",
                          r.is_trm ? "1" : "0"});
    return t;
}

CsvTable share_csv(const ClassifyResult& result) {
    CsvTable t;
    t.header = {"priority_score", "total", "trm", "trm_share", "trm_percent"};
    auto add = [&](const TrmShare& s) {
        t.rows.push_back({s.priority_score, std::to_string(s.total), std::to_string(s.trm), format_share(s.share(), 6),
                          format_share(100.0 * s.share(), 1)});
    };
    for (const auto& s : result.per_score) add(s);
    add(result.overall);
    return t;
}

}  // namespace ebla::harness
