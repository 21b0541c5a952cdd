#include "arsafe/pipeline/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

namespace arsafe::pipeline {

using nlohmann::json;

double d_min(const SessionLog& log) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : log.frames) {
        if (f.d_left) best = std::min(best, *f.d_left);
        if (f.d_right) best = std::min(best, *f.d_right);
    }
    if (std::isinf(best)) throw InvalidArgument("D_min of a log without distances");
    return best;
}

std::optional<double> d_mean(const SessionLog& log, double risk) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& f : log.frames) {
        for (const auto& d : {f.d_left, f.d_right}) {
            if (d && *d < risk) {
                sum += *d;
                ++n;
            }
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

int collision_count(const SessionLog& log, double r, double dwell, CollisionRule rule) {
    if (!(r > 0.0) || !(dwell > 0.0)) throw InvalidArgument("collision radius and dwell must be positive");
    int count = 0;
    for (int arm = 0; arm < 2; ++arm) {
        std::optional<double> run_start;
        double run_last = 0.0;
        auto close = [&] {
            if (!run_start) return;
            const double duration = run_last - *run_start;
            if (duration >= dwell) {
                count += rule == CollisionRule::PerRun ? 1 : static_cast<int>(std::floor(duration / dwell));
            }
            run_start.reset();
        };
        for (const auto& f : log.frames) {
            const auto& d = arm == 0 ? f.d_left : f.d_right;
            if (d && *d < r) {
                if (!run_start) run_start = f.t;
                run_last = f.t;
            } else {
                close();
            }
        }
        close();
    }
    return count;
}

double path_length(const SessionLog& log) {
    double total = 0.0;
    for (std::size_t m = 1; m < log.frames.size(); ++m) {
        total += (log.frames[m].c_left - log.frames[m - 1].c_left).norm() +
                 (log.frames[m].c_right - log.frames[m - 1].c_right).norm();
    }
    return total;
}

double execution_time(const SessionLog& log) {
    std::optional<double> start, end;
    for (const auto& m : log.markers) {
        if (m.kind == "start" && !start) start = m.t;
        if (m.kind == "end") end = m.t;
    }
    if (!start || !end) throw InvalidArgument("execution time needs start and end markers");
    return *end - *start;
}

double sus_score(const SusResponse& r) {
    r.validate();
    int sum = 0;
    for (std::size_t k = 0; k < 10; ++k) sum += (k % 2 == 0) ? r.s[k] - 1 : 5 - r.s[k];
    return 2.5 * sum;
}

namespace {

// Number of sign patterns per achievable value of 2*W+ (ranks doubled so midranks are integers).
std::vector<double> signed_rank_counts(const std::vector<int>& doubled_ranks) {
    const int total = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), 0);
    std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
    counts[0] = 1.0;
    int reach = 0;
    for (int r : doubled_ranks) {
        for (int s = reach; s >= 0; --s) {
            if (counts[s] != 0.0) counts[s + r] += counts[s];
        }
        reach += r;
    }
    return counts;
}

double exact_two_sided(const std::vector<int>& doubled_ranks, int doubled_w_plus) {
    const auto counts = signed_rank_counts(doubled_ranks);
    const double all = std::ldexp(1.0, static_cast<int>(doubled_ranks.size()));
    double lower = 0.0, upper = 0.0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
        if (static_cast<int>(s) <= doubled_w_plus) lower += counts[s];
        if (static_cast<int>(s) >= doubled_w_plus) upper += counts[s];
    }
    return std::min(1.0, 2.0 * std::min(lower, upper) / all);
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("Wilcoxon test needs paired samples of equal size");
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i] - b[i];
        if (!std::isfinite(x)) throw InvalidArgument("Wilcoxon test needs finite samples");
        if (x != 0.0) d.push_back(x);
    }
    if (d.empty()) throw InvalidArgument("Wilcoxon test: all differences are zero");
    const std::size_t n = d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return std::abs(d[i]) < std::abs(d[j]); });
    std::vector<int> doubled(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
        // Ranks i+1..j+1 share their mean; doubled that is i+j+2.
        for (std::size_t k = i; k <= j; ++k) doubled[order[k]] = static_cast<int>(i + j + 2);
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    WilcoxonResult r;
    r.n = n;
    int doubled_plus = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] > 0) doubled_plus += doubled[i];
    }
    const double total = static_cast<double>(n) * static_cast<double>(n + 1) / 2.0;
    r.w_plus = doubled_plus / 2.0;
    r.w_minus = total - r.w_plus;
    r.statistic = std::min(r.w_plus, r.w_minus);
    if (n <= 25) {
        r.exact = true;
        r.p = exact_two_sided(doubled, doubled_plus);
    } else {
        r.exact = false;
        const double nn = static_cast<double>(n);
        const double mean = nn * (nn + 1.0) / 4.0;
        const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
        const double z = std::max(0.0, std::abs(r.w_plus - mean) - 0.5) / std::sqrt(var);
        r.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    }
    return r;
}

double wilcoxon_exact_p(std::size_t n, double statistic) {
    if (n == 0 || n > 25) throw InvalidArgument("exact Wilcoxon distribution is tabulated for 1 <= n <= 25");
    std::vector<int> doubled(n);
    for (std::size_t i = 0; i < n; ++i) doubled[i] = static_cast<int>(2 * (i + 1));
    return exact_two_sided(doubled, static_cast<int>(std::lround(2.0 * statistic)));
}

int wilcoxon_critical_value(std::size_t n, double alpha) {
    int best = -1;
    const int total = static_cast<int>(n * (n + 1) / 2);
    for (int t = 0; t <= total / 2; ++t) {
        if (wilcoxon_exact_p(n, t) <= alpha) best = t;
    }
    return best;
}

std::string significance_stars(double p) {
    if (p <= 0.0001) return "****";
    if (p <= 0.001) return "***";
    if (p <= 0.01) return "**";
    if (p <= 0.05) return "*";
    return "ns";
}

namespace {

struct Pair {
    const SessionLog* control;
    const SessionLog* experiment;
};

std::vector<Pair> pair_logs(const std::vector<SessionLog>& c, const std::vector<SessionLog>& e) {
    if (c.size() != e.size()) throw InvalidArgument("modalities need the same number of sessions");
    const bool by_subject = std::all_of(c.begin(), c.end(), [](const SessionLog& l) { return !l.subject.empty(); });
    std::vector<Pair> pairs;
    if (!by_subject) {
        for (std::size_t i = 0; i < c.size(); ++i) pairs.push_back({&c[i], &e[i]});
        return pairs;
    }
    std::map<std::string, const SessionLog*> exp;
    for (const auto& l : e) exp[l.subject] = &l;
    for (const auto& l : c) {
        const auto it = exp.find(l.subject);
        if (it == exp.end()) throw InvalidArgument("subject '" + l.subject + "' has no experiment session");
        pairs.push_back({&l, it->second});
    }
    return pairs;
}

MetricRow make_row(std::string name, std::string unit, const std::vector<double>& c, const std::vector<double>& e) {
    MetricRow row;
    row.name = std::move(name);
    row.unit = std::move(unit);
    row.pairs = c.size();
    if (!c.empty()) {
        row.control_mean = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
        row.experiment_mean = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
        try {
            row.p = wilcoxon_signed_rank(c, e).p;
            row.tested = true;
        } catch (const InvalidArgument&) {
            row.p = 1.0;
            row.tested = false;
        }
    }
    row.stars = significance_stars(row.p);
    return row;
}

}  // namespace

ModalityReport compare_modalities(const std::vector<SessionLog>& control, const std::vector<SessionLog>& experiment) {
    const auto pairs = pair_logs(control, experiment);
    std::vector<double> c[6], e[6];
    for (const auto& p : pairs) {
        c[0].push_back(100.0 * d_min(*p.control));
        e[0].push_back(100.0 * d_min(*p.experiment));
        const auto mc = d_mean(*p.control), me = d_mean(*p.experiment);
        if (mc && me) {
            c[1].push_back(100.0 * *mc);
            e[1].push_back(100.0 * *me);
        }
        c[2].push_back(collision_count(*p.control));
        e[2].push_back(collision_count(*p.experiment));
        c[3].push_back(100.0 * path_length(*p.control));
        e[3].push_back(100.0 * path_length(*p.experiment));
        c[4].push_back(execution_time(*p.control));
        e[4].push_back(execution_time(*p.experiment));
        if (p.control->sus && p.experiment->sus) {
            c[5].push_back(sus_score(*p.control->sus));
            e[5].push_back(sus_score(*p.experiment->sus));
        }
    }
    ModalityReport r;
    r.rows.push_back(make_row("Minimum Distance D_min", "cm", c[0], e[0]));
    r.rows.push_back(make_row("Mean Distance D_mean", "cm", c[1], e[1]));
    r.rows.push_back(make_row("Collision Number N_c", "", c[2], e[2]));
    r.rows.push_back(make_row("Overall Path S_p", "cm", c[3], e[3]));
    r.rows.push_back(make_row("Execution Time T_exe", "s", c[4], e[4]));
    r.rows.push_back(make_row("SUS Score", "", c[5], e[5]));
    return r;
}

std::string format_report(const ModalityReport& r) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-30s %12s %12s %10s %5s %6s\n", "", "Control", "Experiment", "P value", "", "pairs");
    out += buf;
    for (const auto& row : r.rows) {
        const std::string label = row.unit.empty() ? row.name : row.name + " (" + row.unit + ")";
        if (row.pairs == 0) {
            std::snprintf(buf, sizeof(buf), "%-30s %12s %12s %10s %5s %6zu\n", label.c_str(), "n/a", "n/a", "n/a", "",
                          row.pairs);
        } else {
            std::snprintf(buf, sizeof(buf), "%-30s %12.4f %12.4f %10.4f %5s %6zu\n", label.c_str(), row.control_mean,
                          row.experiment_mean, row.p, row.stars.c_str(), row.pairs);
        }
        out += buf;
    }
    return out;
}

json to_json(const ModalityReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"metric", row.name},
                        {"unit", row.unit},
                        {"control_mean", row.pairs ? json(row.control_mean) : json(nullptr)},
                        {"experiment_mean", row.pairs ? json(row.experiment_mean) : json(nullptr)},
                        {"p", row.p},
                        {"tested", row.tested},
                        {"stars", row.stars},
                        {"pairs", row.pairs}});
    }
    return {{"rows", rows}};
}

}  // namespace arsafe::pipeline
