#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nbs/errors.hpp"
#include "nbs/graph.hpp"
#include "nbs/motifs.hpp"
#include "nbs/perturbation.hpp"
#include "nbs/shell.hpp"
#include "nbs/spectrum.hpp"

namespace nbs {

inline constexpr int kSchemaVersion = 1;

/// 17 significant digits: enough to round-trip any double, and stable from
/// run to run so report files are byte-identical.
inline std::string format_double(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Streaming JSON emitter with fixed key order and fixed float formatting.
/// Output depends only on the call sequence, never on hash order or locale.
class JsonWriter {
public:
    std::string take() && { return std::move(out_); }

    JsonWriter& begin_object() {
        comma();
        out_ += '{';
        fresh_.push_back(true);
        return *this;
    }
    JsonWriter& end_object() {
        fresh_.pop_back();
        out_ += '}';
        return *this;
    }
    JsonWriter& begin_array() {
        comma();
        out_ += '[';
        fresh_.push_back(true);
        return *this;
    }
    JsonWriter& end_array() {
        fresh_.pop_back();
        out_ += ']';
        return *this;
    }
    JsonWriter& key(const std::string& k) {
        comma();
        escape(k);
        out_ += ':';
        pending_value_ = true;
        return *this;
    }
    JsonWriter& value(double v) {
        comma();
        out_ += format_double(v);
        return *this;
    }
    JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
    JsonWriter& value(std::int64_t v) {
        comma();
        out_ += std::to_string(v);
        return *this;
    }
    JsonWriter& value(bool v) {
        comma();
        out_ += v ? "true" : "false";
        return *this;
    }
    JsonWriter& value(const std::string& v) {
        comma();
        escape(v);
        return *this;
    }
    JsonWriter& value(const char* v) { return value(std::string(v)); }
    JsonWriter& null() {
        comma();
        out_ += "null";
        return *this;
    }

private:
    void comma() {
        if (pending_value_) {
            pending_value_ = false;
            return;
        }
        if (!fresh_.empty()) {
            if (!fresh_.back()) out_ += ',';
            fresh_.back() = false;
        }
    }
    void escape(const std::string& s) {
        out_ += '"';
        for (char c : s) {
            switch (c) {
                case '"': out_ += "\\\""; break;
                case '\\': out_ += "\\\\"; break;
                case '\n': out_ += "\\n"; break;
                case '\t': out_ += "\\t"; break;
                case '\r': out_ += "\\r"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof buf, "\\u%04x", c);
                        out_ += buf;
                    } else {
                        out_ += c;
                    }
            }
        }
        out_ += '"';
    }

    std::string out_;
    std::vector<bool> fresh_;
    bool pending_value_ = false;
};

/// Writes through a temp file and renames into place, so a failed run never
/// leaves a partial report at the target path.
inline void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw PreconditionError("cannot write '" + path + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw PreconditionError("cannot move report into place at '" + path + "'");
    }
}

inline void emit_cluster(JsonWriter& w, const EigenvalueCluster& c) {
    w.begin_object();
    w.key("re").value(c.centroid.real());
    w.key("im").value(c.centroid.imag());
    w.key("class").value(to_string(c.cls));
    w.key("am").value(c.am);
    w.key("gm").value(c.gm);
    if (c.cls == EigClass::unit)
        w.key("unit_order").value(c.unit_order);
    w.end_object();
}

inline void emit_ledger_row(JsonWriter& w, const LedgerRow& row) {
    w.begin_object();
    w.key("label").value(row.label);
    w.key("predicted").value(row.predicted);
    w.key("observed").value(row.observed);
    w.key("match").value(row.match);
    if (!row.note.empty()) w.key("note").value(row.note);
    w.end_object();
}

inline int cluster_gm_near(const SpectrumReport& rep, Complex target) {
    for (const auto& c : rep.clusters)
        if (!c.is_zero && std::abs(c.centroid - target) <= 1e-6) return c.gm;
    return 0;
}

/// The one-stop structural and spectral report.
inline std::string analyze_json(const std::string& input, const Graph& g,
                                const SpectrumReport& rep) {
    ShellDecomposition sd(g);
    auto core = sd.two_core();

    int am0 = 0, gm0 = 0;
    for (const auto& c : rep.clusters)
        if (c.is_zero) {
            am0 = c.am;
            gm0 = c.gm;
        }

    JsonWriter w;
    w.begin_object();
    w.key("schema_version").value(kSchemaVersion);
    w.key("command").value("analyze");
    w.key("input").value(input);

    w.key("graph").begin_object();
    w.key("nodes").value(g.num_nodes());
    w.key("edges").value(g.num_edges());
    w.key("oriented_edges").value(g.num_oriented());
    w.key("min_degree").value(g.min_degree());
    w.key("tree").value(g.is_tree());
    w.key("cycle_graph").value(g.is_cycle_graph());
    w.key("bipartite").value(is_bipartite(g));
    w.key("md2").value(g.is_md2());
    w.end_object();

    w.key("shell").begin_object();
    w.key("s1").value(sd.s1());
    w.key("n1").value(sd.n1());
    w.key("layers").value(static_cast<int>(sd.layers().size()));
    w.key("two_core_nodes").value(core ? core->num_nodes() : 0);
    w.key("two_core_edges").value(core ? core->num_edges() : 0);
    w.end_object();

    w.key("am0").value(am0);
    w.key("gm0").value(gm0);
    w.key("gm_plus1").value(cluster_gm_near(rep, Complex(1.0, 0.0)));
    w.key("gm_minus1").value(cluster_gm_near(rep, Complex(-1.0, 0.0)));
    w.key("rho").value(rep.rho);
    w.key("nu").value(rep.nu);
    w.key("diagonalizable").value(rep.diagonalizable);

    w.key("clusters").begin_array();
    for (const auto& c : rep.clusters) emit_cluster(w, c);
    w.end_array();

    w.key("ledger").begin_array();
    for (const auto& row : rep.ledger) emit_ledger_row(w, row);
    w.end_array();

    w.key("motifs").begin_array();
    if (core)
        for (const auto& m : find_motifs(*core)) {
            w.begin_object();
            w.key("kind").value(to_string(m.kind));
            w.key("size").value(m.size);
            w.key("anchors").begin_array();
            for (int a : m.anchors) w.value(a);
            w.end_array();
            w.key("whole_graph").value(m.whole_graph);
            w.end_object();
        }
    w.end_array();

    w.key("unit_prediction");
    if (core) {
        UnitPrediction up = predict_unit_spectrum(*core);
        w.begin_array();
        for (const auto& row : up.rows) {
            w.begin_object();
            w.key("order").value(row.order);
            w.key("motif_count").value(row.motif_count);
            w.key("raw_gm").value(row.raw_gm);
            w.key("independent_gm").value(row.independent_gm);
            w.end_object();
        }
        w.end_array();
    } else {
        w.null();
    }

    w.key("leading");
    if (g.is_md2()) {
        LeadingReport lr = leading_report(g);
        w.begin_object();
        w.key("rho").value(lr.rho);
        w.key("nu").value(lr.nu);
        w.key("cycle_special").value(lr.cycle_special);
        w.key("all_simple").value(lr.all_simple);
        w.key("max_deviation").value(lr.max_deviation);
        w.key("values").begin_array();
        for (Complex v : lr.leading) {
            w.begin_object();
            w.key("re").value(v.real());
            w.key("im").value(v.imag());
            w.end_object();
        }
        w.end_array();
        w.end_object();
    } else {
        w.null();
    }

    w.key("companion").begin_object();
    w.key("ran").value(rep.companion.ran);
    w.key("consistent").value(rep.companion.consistent);
    w.key("max_mismatch").value(rep.companion.max_mismatch);
    w.end_object();

    w.end_object();
    std::string out = std::move(w).take();
    out += '\n';
    return out;
}

/// One CSV row per eigenvalue; the coordinates are the owning cluster's
/// centroid, so the kernel region prints as exact zeros.
inline std::string spectrum_csv(const SpectrumReport& rep) {
    std::string out = "re,im,class,am,gm\n";
    for (const auto& c : rep.clusters)
        for (int i = 0; i < c.am; ++i) {
            out += format_double(c.centroid.real());
            out += ',';
            out += format_double(c.centroid.imag());
            out += ',';
            out += to_string(c.cls);
            out += ',';
            out += std::to_string(c.am);
            out += ',';
            out += std::to_string(c.gm);
            out += '\n';
        }
    return out;
}

inline std::string disks_csv(const GershgorinTrace& trace) {
    std::string out = "t,i,center_re,center_im,radius\n";
    for (const auto& row : trace.rows) {
        out += format_double(row.t);
        out += ',';
        out += std::to_string(row.disk);
        out += ',';
        out += format_double(row.center.real());
        out += ',';
        out += format_double(row.center.imag());
        out += ',';
        out += format_double(row.radius);
        out += '\n';
    }
    return out;
}

inline std::string probe_json(const std::string& input, const PerturbationProbe& probe,
                              const std::string& disks_path) {
    JsonWriter w;
    w.begin_object();
    w.key("schema_version").value(kSchemaVersion);
    w.key("command").value("perturb");
    w.key("input").value(input);
    w.key("attach").begin_array();
    for (int k : probe.blocks.attach) w.value(k);
    w.end_array();
    w.key("degree").value(probe.blocks.degree());
    w.key("lambda").value(probe.lambda);
    w.key("lambda_c").value(probe.lambda_c);
    w.key("eigen_drop").value(probe.eigen_drop);
    w.key("alpha11").value(probe.alpha11);
    w.key("trivial").value(probe.trivial);
    w.key("direct_lambda_c").value(probe.direct_lambda_c);
    w.key("direct_gap").value(probe.direct_gap);
    w.key("yx_eigen_gap");
    if (std::isfinite(probe.yx_eigen_gap))
        w.value(probe.yx_eigen_gap);
    else
        w.null();
    w.key("det_identity_max_rel").value(probe.det_identity_max_rel);
    w.key("bisection_evals").value(probe.bisection_evals);
    w.key("y_samples").begin_array();
    for (const auto& s : probe.y_samples) {
        w.begin_object();
        w.key("t").value(s.t);
        w.key("y").value(s.y);
        w.end_object();
    }
    w.end_array();
    w.key("disks_available").value(probe.disks.available);
    w.key("disks_csv");
    if (disks_path.empty())
        w.null();
    else
        w.value(disks_path);
    if (!probe.disks.note.empty()) w.key("disks_note").value(probe.disks.note);
    w.end_object();
    std::string out = std::move(w).take();
    out += '\n';
    return out;
}

}  // namespace nbs
