#include "curate/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "curate/batch.hpp"
#include "curate/error.hpp"
#include "curate/mixer.hpp"
#include "curate/parallel.hpp"
#include "curate/router.hpp"
#include "curate/routing_analysis.hpp"
#include "curate/scaffold_model.hpp"
#include "curate/scaffold_select.hpp"
#include "curate/text.hpp"

namespace curate::cli {

std::string emit_summary(const RunSummary& s) {
    std::ostringstream out;
    out << "in=" << s.in << " kept=" << s.kept << " discarded=" << (s.in - std::min(s.kept, s.in)) << '\n';
    for (const auto& [reason, n] : s.reasons) out << "reason " << reason << '=' << n << '\n';
    for (const auto& [name, n] : s.counts) out << "count " << name << '=' << n << '\n';
    if (s.data_errors > 0) out << "errors=" << s.data_errors << '\n';
    if (s.wall_seconds) out << "wall_seconds=" << *s.wall_seconds << '\n';
    return out.str();
}

namespace {

/// Raised for problems with the data itself; maps to exit code 1.
class DataError : public Error {
public:
    using Error::Error;
};

std::string fmt(double v) {
    std::ostringstream o;
    o.precision(12);
    o << v;
    return o.str();
}

/// Output written to a temporary file and renamed into place on commit;
/// "-" or an empty path writes to the fallback stream.
class OutputFile {
public:
    OutputFile(std::string path, std::ostream& fallback) : path_(std::move(path)), fallback_(fallback) {
        if (to_stream()) return;
        tmp_ = path_ + ".tmp";
        file_.open(tmp_, std::ios::binary | std::ios::trunc);
        if (!file_) throw ConfigError("cannot write " + path_);
    }
    OutputFile(const OutputFile&) = delete;
    OutputFile& operator=(const OutputFile&) = delete;
    ~OutputFile() {
        if (!to_stream() && !committed_) {
            file_.close();
            std::remove(tmp_.c_str());
        }
    }

    std::ostream& stream() { return to_stream() ? fallback_ : file_; }

    void commit() {
        if (to_stream()) {
            fallback_.flush();
            return;
        }
        file_.close();
        if (!file_ || std::rename(tmp_.c_str(), path_.c_str()) != 0) throw ConfigError("cannot write " + path_);
        committed_ = true;
    }

private:
    bool to_stream() const { return path_.empty() || path_ == "-"; }

    std::string path_;
    std::ostream& fallback_;
    std::string tmp_;
    std::ofstream file_;
    bool committed_ = false;
};

void require_readable(const std::vector<std::string>& paths) {
    for (const auto& p : paths) {
        if (p.empty()) continue;
        std::ifstream in(p);
        if (!in) throw ConfigError("cannot read " + p);
    }
}

void require_writable_dirs(const std::vector<std::string>& paths) {
    for (const auto& p : paths) {
        if (p.empty() || p == "-") continue;
        const auto dir = std::filesystem::path(p).parent_path();
        if (!dir.empty() && !std::filesystem::is_directory(dir)) throw ConfigError("no such directory for " + p);
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Context {
    std::uint64_t seed = 0;
    int threads = 0;
    bool serial = false;
    bool timing = false;
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;
    RunSummary summary;

    Execution exec() const { return serial ? Execution::Serial : Execution::Parallel; }

    std::vector<Document> load(const std::string& path) {
        auto result = read_documents_file(path);
        for (const auto& e : result.errors) *err << path << ": " << e << '\n';
        summary.data_errors += result.errors.size();
        return std::move(result.documents);
    }
};

std::pair<std::string, std::string> split_assignment(const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("expected name=value, got " + s);
    return {s.substr(0, eq), s.substr(eq + 1)};
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::logic_error&) {
    }
    throw ConfigError("bad number for " + what + ": " + s);
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        if (!s.empty() && s[0] != '-') {
            const auto v = std::stoull(s, &used);
            if (used == s.size()) return v;
        }
    } catch (const std::logic_error&) {
    }
    throw ConfigError("bad integer for " + what + ": " + s);
}

void write_documents(const std::string& path, const std::vector<const Document*>& docs, std::ostream& fallback,
                     std::vector<std::unique_ptr<OutputFile>>& pending) {
    if (path.empty()) return;
    auto file = std::make_unique<OutputFile>(path, fallback);
    for (const auto* d : docs) file->stream() << serialize_document(*d) << '\n';
    pending.push_back(std::move(file));
}

void commit_all(std::vector<std::unique_ptr<OutputFile>>& pending) {
    for (auto& f : pending) f->commit();
}

bool in_code_family(const Document& d) {
    return d.domain && (*d.domain == DomainLabel::Code || *d.domain == DomainLabel::CodeNL);
}

bool in_math(const Document& d) { return d.domain && *d.domain == DomainLabel::Math; }

// ---- filter-code -------------------------------------------------------------

struct FilterCodeArgs {
    std::string input, rules, out, kept, index_in, index_out;
    unsigned radius = 3;
    bool domain_scope = false;
};

void cmd_filter_code(Context& ctx, const FilterCodeArgs& a) {
    require_readable({a.input, a.rules, a.index_in});
    require_writable_dirs({a.out, a.kept, a.index_out});
    auto registry = code::RuleRegistry::defaults();
    if (!a.rules.empty()) registry.merge_file(a.rules);
    auto index = a.index_in.empty() ? code::DedupIndex(a.radius) : code::DedupIndex::load(a.index_in);

    const auto docs = ctx.load(a.input);
    std::vector<Document> targets;
    std::vector<bool> targeted(docs.size(), true);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (a.domain_scope && !in_code_family(docs[i])) targeted[i] = false;
        else targets.push_back(docs[i]);
    }
    const auto reports = filter_code_batch(targets, registry, index, {}, ctx.exec());

    std::vector<std::unique_ptr<OutputFile>> pending;
    auto report = std::make_unique<OutputFile>(a.out, *ctx.out);
    report->stream() << kReportHeader << '\n';
    std::vector<const Document*> kept;
    std::size_t r = 0;
    ctx.summary.in = targets.size();
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (!targeted[i]) {
            kept.push_back(&docs[i]);
            continue;
        }
        const auto& rep = reports[r++];
        report->stream() << write_report_line(rep) << '\n';
        if (rep.decision == Decision::Keep) {
            kept.push_back(&docs[i]);
            ++ctx.summary.kept;
        }
        for (const auto& reason : rep.discard_reasons) ++ctx.summary.reasons[reason];
    }
    pending.push_back(std::move(report));
    write_documents(a.kept, kept, *ctx.out, pending);
    if (!a.index_out.empty()) index.save(a.index_out);
    commit_all(pending);
}

// ---- validate-math -----------------------------------------------------------

struct ValidateMathArgs {
    std::string input, out, kept;
    bool domain_scope = false;
    std::size_t min_failed = 2;
    double max_formula_ratio = 0.80;
    bool variable_heuristic = false;
    std::vector<std::string> extra_commands;
    std::vector<std::string> markers;
};

void cmd_validate_math(Context& ctx, const ValidateMathArgs& a) {
    require_readable({a.input});
    require_writable_dirs({a.out, a.kept});
    math::MathOptions opt;
    opt.min_failed_checks = a.min_failed;
    opt.max_formula_ratio = a.max_formula_ratio;
    opt.variable_heuristic = a.variable_heuristic;
    opt.extra_commands = a.extra_commands;
    if (!a.markers.empty()) opt.placeholder_markers = a.markers;
    if (opt.min_failed_checks == 0 || opt.min_failed_checks > 4) throw ConfigError("min-failed must be in [1, 4]");

    const auto docs = ctx.load(a.input);
    std::vector<Document> targets;
    for (const auto& d : docs)
        if (!a.domain_scope || in_math(d)) targets.push_back(d);
    const auto verdicts = validate_math_batch(targets, opt, ctx.exec());

    std::vector<std::unique_ptr<OutputFile>> pending;
    auto report = std::make_unique<OutputFile>(a.out, *ctx.out);
    report->stream() << "doc_id\tdecision\tfailed_checks\tissues\n";
    std::vector<const Document*> kept;
    std::size_t v = 0;
    ctx.summary.in = targets.size();
    for (const auto& d : docs) {
        if (a.domain_scope && !in_math(d)) {
            kept.push_back(&d);
            continue;
        }
        const auto& verdict = verdicts[v++];
        std::vector<std::string> checks;
        for (auto c : verdict.failed_checks) checks.emplace_back(math::to_string(c));
        std::vector<std::string> issues;
        for (const auto& is : verdict.issues)
            issues.push_back(std::string(math::to_string(is.check)) + ":" + is.code + "@" + std::to_string(is.location));
        const bool retain = verdict.decision == math::MathDecision::Retain;
        report->stream() << d.id << '\t' << (retain ? "retain" : "remove") << '\t'
                         << (checks.empty() ? "-" : text::join(checks, ";")) << '\t'
                         << (issues.empty() ? "-" : text::join(issues, ";")) << '\n';
        if (retain) {
            kept.push_back(&d);
            ++ctx.summary.kept;
        } else {
            for (const auto& c : checks) ++ctx.summary.reasons[c];
        }
    }
    pending.push_back(std::move(report));
    write_documents(a.kept, kept, *ctx.out, pending);
    commit_all(pending);
}

// ---- classify-domain ---------------------------------------------------------

struct ClassifyArgs {
    std::string input, out, annotate, rules;
    double density_threshold = 0.60;
    std::size_t max_prose_run = 3;
    std::size_t min_code_lines = 2;
    std::size_t boilerplate_min_docs = 5;
};

void cmd_classify_domain(Context& ctx, const ClassifyArgs& a) {
    require_readable({a.input, a.rules});
    require_writable_dirs({a.out, a.annotate});
    if (!(a.density_threshold >= 0.0 && a.density_threshold <= 1.0))
        throw ConfigError("density threshold must be in [0, 1]");
    auto registry = code::RuleRegistry::defaults();
    if (!a.rules.empty()) registry.merge_file(a.rules);
    domain::DomainOptions opt;
    opt.density_threshold = a.density_threshold;
    opt.max_prose_run = a.max_prose_run;
    opt.min_code_lines = a.min_code_lines;
    opt.registry = &registry;

    auto docs = ctx.load(a.input);
    const auto results = classify_domain_batch(docs, opt, ctx.exec(), a.boilerplate_min_docs);

    std::vector<std::unique_ptr<OutputFile>> pending;
    if (a.annotate.empty() || !a.out.empty()) {
        auto tsv = std::make_unique<OutputFile>(a.out, *ctx.out);
        tsv->stream() << "doc_id\tlabel\tdensity\n";
        for (std::size_t i = 0; i < docs.size(); ++i)
            tsv->stream() << docs[i].id << '\t' << to_string(results[i].label) << '\t' << fmt(results[i].density)
                          << '\n';
        pending.push_back(std::move(tsv));
    }
    std::vector<const Document*> annotated;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        docs[i].domain = results[i].label;
        annotated.push_back(&docs[i]);
        ++ctx.summary.counts[std::string(to_string(results[i].label))];
    }
    write_documents(a.annotate, annotated, *ctx.out, pending);
    ctx.summary.in = ctx.summary.kept = docs.size();
    commit_all(pending);
}

// ---- scaffold ----------------------------------------------------------------

struct TrainArgs {
    std::string positives, negatives, input, model, loss_out;
    std::uint32_t epochs = 5;
    double lr = 0.1;
    std::uint32_t dim = 16;
    std::uint32_t buckets = 1u << 20;
    std::uint32_t word_ngrams = 2;
    std::uint32_t char_min = 3;
    std::uint32_t char_max = 6;
    bool parallel_train = false;
};

void cmd_train(Context& ctx, const TrainArgs& a) {
    if (a.positives.empty() != a.negatives.empty())
        throw ConfigError("--positives and --negatives must be given together");
    if (a.positives.empty() && a.input.empty()) throw ConfigError("give --input or --positives/--negatives");
    require_readable({a.positives, a.negatives, a.input});
    require_writable_dirs({a.model, a.loss_out});
    scaffold::ModelConfig config{a.buckets, a.dim, a.word_ngrams, a.char_min, a.char_max};
    config.validate();

    scaffold::LabeledCorpus corpus;
    if (!a.input.empty()) {
        auto docs = ctx.load(a.input);
        std::vector<Document> labeled;
        for (auto& d : docs) {
            if (d.structured) labeled.push_back(std::move(d));
            else {
                *ctx.err << a.input << ": document " << d.id << " has no label\n";
                ++ctx.summary.data_errors;
            }
        }
        corpus = scaffold::labeled_from_documents(std::move(labeled));
    }
    if (!a.positives.empty()) {
        for (auto& d : ctx.load(a.positives)) corpus.push_back({std::move(d), true});
        for (auto& d : ctx.load(a.negatives)) corpus.push_back({std::move(d), false});
    }
    scaffold::TrainOptions opt;
    opt.epochs = a.epochs;
    opt.learning_rate = a.lr;
    opt.seed = ctx.seed;
    opt.execution = a.parallel_train ? Execution::Parallel : Execution::Serial;
    auto result = scaffold::train_classifier(corpus, config, opt);

    std::vector<std::unique_ptr<OutputFile>> pending;
    if (!a.loss_out.empty()) {
        auto f = std::make_unique<OutputFile>(a.loss_out, *ctx.out);
        f->stream() << "epoch\tloss\n";
        for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
            f->stream() << e << '\t' << fmt(result.epoch_loss[e]) << '\n';
        pending.push_back(std::move(f));
    }
    result.model.save(a.model);
    commit_all(pending);
    ctx.summary.in = ctx.summary.kept = corpus.size();
}

scaffold::LabeledCorpus load_labeled(Context& ctx, const std::string& path) {
    auto docs = ctx.load(path);
    std::vector<Document> labeled;
    for (auto& d : docs) {
        if (d.structured) labeled.push_back(std::move(d));
        else {
            *ctx.err << path << ": document " << d.id << " has no label\n";
            ++ctx.summary.data_errors;
        }
    }
    return scaffold::labeled_from_documents(std::move(labeled));
}

void write_metrics(std::ostream& o, const scaffold::ClassifierMetrics& m) {
    o << "tp=" << m.tp << "\nfp=" << m.fp << "\ntn=" << m.tn << "\nfn=" << m.fn << "\naccuracy=" << fmt(m.accuracy)
      << "\nprecision=" << fmt(m.precision) << "\nrecall=" << fmt(m.recall) << "\nf1=" << fmt(m.f1) << '\n';
}

struct CalibrateArgs {
    std::string model, validation, out, report;
    double floor = 0.999;
};

void cmd_calibrate(Context& ctx, const CalibrateArgs& a) {
    require_readable({a.model, a.validation});
    const auto out_path = a.out.empty() ? a.model : a.out;
    require_writable_dirs({out_path, a.report});
    if (!(a.floor >= 0.0 && a.floor <= 1.0)) throw ConfigError("floor must be in [0, 1]");
    auto model = scaffold::ScaffoldModel::load(a.model);
    const auto validation = load_labeled(ctx, a.validation);
    const double tau = scaffold::calibrate_threshold(model, validation, a.floor, ctx.exec());
    model.tau = tau;
    OutputFile report(a.report, *ctx.out);
    report.stream() << "tau=" << fmt(tau) << '\n';
    write_metrics(report.stream(), scaffold::evaluate_classifier(model, tau, validation, ctx.exec()));
    model.save(out_path);
    report.commit();
    ctx.summary.in = ctx.summary.kept = validation.size();
}

struct SelectArgs {
    std::string model, input, out, rejected;
    bool domain_scope = false;
    std::optional<double> tau;
};

void cmd_select(Context& ctx, const SelectArgs& a) {
    require_readable({a.model, a.input});
    require_writable_dirs({a.out, a.rejected});
    auto model = scaffold::ScaffoldModel::load(a.model);
    if (a.tau) model.tau = *a.tau;
    if (!model.tau) throw ConfigError("model threshold is not calibrated; run calibrate or pass --tau");
    const auto docs = ctx.load(a.input);
    std::vector<Document> pool;
    for (const auto& d : docs)
        if (!a.domain_scope || in_math(d)) pool.push_back(d);
    const auto scores = scaffold::score_documents(model, pool, ctx.exec());
    std::vector<const Document*> selected, rejected;
    for (std::size_t i = 0; i < pool.size(); ++i) (scores[i] >= *model.tau ? selected : rejected).push_back(&pool[i]);
    std::vector<std::unique_ptr<OutputFile>> pending;
    auto f = std::make_unique<OutputFile>(a.out, *ctx.out);
    for (const auto* d : selected) f->stream() << serialize_document(*d) << '\n';
    pending.push_back(std::move(f));
    write_documents(a.rejected, rejected, *ctx.out, pending);
    commit_all(pending);
    ctx.summary.in = pool.size();
    ctx.summary.kept = selected.size();
    if (!rejected.empty()) ctx.summary.reasons["below_threshold"] = rejected.size();
}

struct StatsArgs {
    std::vector<std::string> inputs;
    std::string out;
};

void cmd_stats(Context& ctx, const StatsArgs& a) {
    require_readable(a.inputs);
    require_writable_dirs({a.out});
    OutputFile f(a.out, *ctx.out);
    f.stream() << "# " << scaffold::kStatsVersion << '\n'
               << "set\tdocuments\tsymbol_density\tavg_derivation_steps\tindentation_ratio\tavg_text_length\n";
    for (const auto& path : a.inputs) {
        const auto docs = ctx.load(path);
        const auto st = scaffold::structural_stats(docs);
        f.stream() << path << '\t' << docs.size() << '\t' << fmt(st.symbol_density) << '\t'
                   << fmt(st.avg_derivation_steps) << '\t' << fmt(st.indentation_ratio) << '\t'
                   << fmt(st.avg_text_length) << '\n';
        ctx.summary.in += docs.size();
    }
    ctx.summary.kept = ctx.summary.in;
    f.commit();
}

struct AuditArgs {
    std::string input, out;
};

void cmd_audit(Context& ctx, const AuditArgs& a) {
    require_readable({a.input});
    require_writable_dirs({a.out});
    const auto docs = ctx.load(a.input);
    const auto report = scaffold::contamination_audit(docs);
    OutputFile f(a.out, *ctx.out);
    f.stream() << "doc_id\treasons\n";
    for (const auto& flag : report.flagged) {
        f.stream() << flag.doc_id << '\t' << text::join(flag.reasons, ";") << '\n';
        for (const auto& r : flag.reasons) ++ctx.summary.reasons[r];
    }
    f.commit();
    ctx.summary.in = report.checked;
    ctx.summary.kept = report.checked - report.flagged.size();
}

struct EvaluateArgs {
    std::string model, input, out;
    std::optional<double> tau;
};

void cmd_evaluate(Context& ctx, const EvaluateArgs& a) {
    require_readable({a.model, a.input});
    require_writable_dirs({a.out});
    const auto model = scaffold::ScaffoldModel::load(a.model);
    const auto tau = a.tau ? a.tau : model.tau;
    if (!tau) throw ConfigError("no threshold: calibrate the model or pass --tau");
    const auto labeled = load_labeled(ctx, a.input);
    const auto m = scaffold::evaluate_classifier(model, *tau, labeled, ctx.exec());
    OutputFile f(a.out, *ctx.out);
    f.stream() << "tau=" << fmt(*tau) << '\n';
    write_metrics(f.stream(), m);
    f.commit();
    ctx.summary.in = ctx.summary.kept = labeled.size();
}

// ---- mixer -------------------------------------------------------------------

struct CutoffArgs {
    double admit = 0.0, mid = 0.5, high = 0.8;
    mix::TierCutoffs get() const {
        mix::TierCutoffs c{admit, mid, high};
        c.validate();
        return c;
    }
};

struct StratifyArgs {
    std::string input, out;
    CutoffArgs cutoffs;
};

void cmd_stratify(Context& ctx, const StratifyArgs& a) {
    const auto cutoffs = a.cutoffs.get();
    require_readable({a.input});
    require_writable_dirs({a.out});
    const auto docs = ctx.load(a.input);
    OutputFile f(a.out, *ctx.out);
    f.stream() << "doc_id\ttier\n";
    for (const auto& t : mix::stratify(docs, cutoffs)) {
        f.stream() << t.doc_id << '\t' << mix::to_string(t.tier) << '\n';
        if (t.tier == mix::Tier::Excluded) ++ctx.summary.reasons["excluded"];
        else ++ctx.summary.kept;
        ++ctx.summary.counts[std::string(mix::to_string(t.tier))];
    }
    f.commit();
    ctx.summary.in = docs.size();
}

std::map<std::string, std::uint64_t> tokens_by_domain(Context& ctx, const std::vector<Document>& docs) {
    std::map<std::string, std::uint64_t> out;
    for (const auto& d : docs) {
        if (!d.domain) {
            *ctx.err << "document " << d.id << " has no domain\n";
            ++ctx.summary.data_errors;
            continue;
        }
        out[std::string(to_string(*d.domain))] += count_tokens(d.text);
    }
    return out;
}

struct MixPlanArgs {
    std::string input, out;
    std::vector<std::string> available, weights;
    std::uint64_t budget = 0;
};

void cmd_mix_plan(Context& ctx, const MixPlanArgs& a) {
    if (a.input.empty() == a.available.empty()) throw ConfigError("give exactly one of --input or --available");
    std::map<std::string, double> weights;
    for (const auto& w : a.weights) {
        const auto [name, value] = split_assignment(w);
        weights[name] = parse_double(value, name);
    }
    std::map<std::string, std::uint64_t> available;
    for (const auto& s : a.available) {
        const auto [name, value] = split_assignment(s);
        available[name] = parse_u64(value, name);
    }
    require_readable({a.input});
    require_writable_dirs({a.out});
    if (!a.input.empty()) {
        const auto docs = ctx.load(a.input);
        available = tokens_by_domain(ctx, docs);
        ctx.summary.in = ctx.summary.kept = docs.size();
    }
    const auto plan = mix::plan_mixture(available, weights, a.budget);
    OutputFile f(a.out, *ctx.out);
    f.stream() << mix::plan_to_json(plan);
    f.commit();
}

struct AblateArgs {
    std::string plan, domain, out;
};

void cmd_ablate(Context& ctx, const AblateArgs& a) {
    require_readable({a.plan});
    require_writable_dirs({a.out});
    const auto plan = mix::plan_from_json(read_file(a.plan));
    const auto next = mix::ablate_domain(plan, a.domain);
    OutputFile f(a.out, *ctx.out);
    f.stream() << mix::plan_to_json(next);
    f.commit();
}

struct ReplaceArgs {
    std::string plan, domain, subset, subset_input, out;
    std::optional<std::uint64_t> subset_tokens;
    double fraction = 0.0;
};

void cmd_replace(Context& ctx, const ReplaceArgs& a) {
    if (a.subset_input.empty() == !a.subset_tokens.has_value())
        throw ConfigError("give exactly one of --subset-tokens or --subset-input");
    require_readable({a.plan, a.subset_input});
    require_writable_dirs({a.out});
    const auto plan = mix::plan_from_json(read_file(a.plan));
    std::uint64_t tokens = a.subset_tokens.value_or(0);
    if (!a.subset_input.empty()) {
        for (const auto& d : ctx.load(a.subset_input)) tokens += count_tokens(d.text);
    }
    const auto next = mix::replace_within_domain(plan, a.domain, a.subset, tokens, a.fraction);
    OutputFile f(a.out, *ctx.out);
    f.stream() << mix::plan_to_json(next);
    f.commit();
}

struct SampleArgs {
    std::string plan, input, out;
    std::vector<std::string> subsets;
    CutoffArgs cutoffs;
    double w_high = 4.0, w_medium = 2.0, w_low = 1.0;
    std::uint32_t max_epochs = 1;
};

void cmd_sample(Context& ctx, const SampleArgs& a) {
    const auto cutoffs = a.cutoffs.get();
    std::vector<std::pair<std::string, std::string>> subsets;
    for (const auto& s : a.subsets) subsets.push_back(split_assignment(s));
    std::vector<std::string> inputs{a.plan, a.input};
    for (const auto& [_, path] : subsets) inputs.push_back(path);
    require_readable(inputs);
    require_writable_dirs({a.out});
    const auto plan = mix::plan_from_json(read_file(a.plan));

    mix::CorpusIndex index;
    std::set<std::string> in_subset;
    for (const auto& [name, path] : subsets) {
        auto& pool = index.pools[name];
        for (const auto& d : ctx.load(path)) {
            const auto c = plan.cutoffs.contains(name) ? plan.cutoffs.at(name) : cutoffs;
            const auto tier = mix::assign_tier(d, c);
            in_subset.insert(d.id);
            if (tier != mix::Tier::Excluded) pool.push_back({d.id, count_tokens(d.text), tier});
        }
    }
    const auto docs = ctx.load(a.input);
    for (const auto& d : docs) {
        if (in_subset.contains(d.id)) continue;
        if (!d.domain) {
            *ctx.err << "document " << d.id << " has no domain\n";
            ++ctx.summary.data_errors;
            continue;
        }
        const std::string name(to_string(*d.domain));
        const auto c = plan.cutoffs.contains(name) ? plan.cutoffs.at(name) : cutoffs;
        const auto tier = mix::assign_tier(d, c);
        if (tier == mix::Tier::Excluded) {
            ++ctx.summary.reasons["excluded"];
            continue;
        }
        index.pools[name].push_back({d.id, count_tokens(d.text), tier});
    }
    mix::TierWeights tw{a.w_high, a.w_medium, a.w_low};
    mix::SampleOptions opt;
    opt.max_epochs = a.max_epochs;
    const auto manifest = mix::sample_stream(plan, tw, index, ctx.seed, opt);
    OutputFile f(a.out, *ctx.out);
    f.stream() << mix::kManifestHeader << '\n';
    for (const auto& e : manifest) {
        f.stream() << mix::manifest_line(e) << '\n';
        ctx.summary.counts["tokens." + e.domain] += e.tokens;
    }
    f.commit();
    ctx.summary.in = docs.size();
    ctx.summary.kept = manifest.size();
    ctx.summary.in = std::max(ctx.summary.in, ctx.summary.kept);
}

// ---- router ------------------------------------------------------------------

struct SimulateArgs {
    std::size_t experts = 64, top_k = 2, tokens = 64, dim = 32;
    std::uint64_t warmup = 0, steps = 1000;
    std::string score_fn = "softmax";
    std::optional<std::uint64_t> noise_seed;
    std::optional<std::size_t> bias_expert;
    double bias = 0.0;
    double momentum = 0.99;
    bool renormalize = false;
    std::string out, trace, counts, config_id = "sim", domain = "all";
};

void cmd_simulate(Context& ctx, const SimulateArgs& a) {
    require_writable_dirs({a.out, a.trace, a.counts});
    router::GateConfig config;
    config.experts = a.experts;
    config.top_k = a.top_k;
    config.warmup_steps = a.warmup;
    config.score_fn = router::parse_score_fn(a.score_fn);
    config.stats_momentum = a.momentum;
    config.renormalize = a.renormalize;
    config.validate();
    if (a.dim == 0) throw ConfigError("dim must be positive");
    auto params = router::RouterParams::random(a.dim, a.experts, ctx.seed);
    if (a.bias_expert) {
        if (*a.bias_expert >= a.experts) throw ConfigError("bias expert out of range");
        params.bias[*a.bias_expert] = a.bias;
    }
    router::SimulationOptions opt;
    opt.steps = a.steps;
    opt.tokens_per_step = a.tokens;
    opt.input_seed = ctx.seed;
    opt.noise_seed = a.noise_seed.value_or(ctx.seed);
    opt.execution = ctx.exec();
    const auto trace = router::simulate_routing(config, params, opt);

    std::vector<std::unique_ptr<OutputFile>> pending;
    auto f = std::make_unique<OutputFile>(a.out, *ctx.out);
    f->stream() << "# score_fn=" << router::to_string(config.score_fn)
                << " balance_loss=N*sum_i(f_i*P_i) z_loss=mean(logsumexp(s)^2)\n"
                << router::kSummaryHeader << '\n';
    for (const auto& s : trace.steps)
        f->stream() << s.step << '\t' << fmt(s.alpha) << '\t' << fmt(s.max_load_fraction) << '\t' << fmt(s.balance_loss)
                    << '\t' << fmt(s.z_loss) << '\n';
    pending.push_back(std::move(f));
    if (!a.trace.empty()) {
        auto t = std::make_unique<OutputFile>(a.trace, *ctx.out);
        const auto per_step = trace.tokens_per_step * trace.top_k;
        for (std::size_t s = 0; s < trace.steps.size(); ++s) {
            nlohmann::ordered_json j;
            j["step"] = trace.steps[s].step;
            j["alpha"] = trace.steps[s].alpha;
            j["chosen"] = std::vector<std::uint32_t>(trace.chosen.begin() + static_cast<std::ptrdiff_t>(s * per_step),
                                                     trace.chosen.begin() + static_cast<std::ptrdiff_t>((s + 1) * per_step));
            j["gates"] = std::vector<double>(trace.gates.begin() + static_cast<std::ptrdiff_t>(s * per_step),
                                             trace.gates.begin() + static_cast<std::ptrdiff_t>((s + 1) * per_step));
            t->stream() << j.dump() << '\n';
        }
        pending.push_back(std::move(t));
    }
    if (!a.counts.empty()) {
        auto c = std::make_unique<OutputFile>(a.counts, *ctx.out);
        c->stream() << "config_id\tdomain\texpert_id\tcount\n";
        for (std::size_t i = 0; i < trace.counts.size(); ++i)
            c->stream() << a.config_id << '\t' << a.domain << '\t' << i << '\t' << trace.counts[i] << '\n';
        pending.push_back(std::move(c));
    }
    commit_all(pending);
    ctx.summary.in = ctx.summary.kept = static_cast<std::size_t>(a.steps * a.tokens);
}

struct AnalyzeArgs {
    std::vector<std::string> inputs;
    std::string baseline, out, js, plot_data;
    std::size_t top_k = 20;
};

void cmd_analyze(Context& ctx, const AnalyzeArgs& a) {
    require_readable(a.inputs);
    require_writable_dirs({a.out, a.js, a.plot_data});
    std::ostringstream merged;
    for (const auto& path : a.inputs) {
        std::ifstream in(path);
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (first && line.starts_with("config_id")) {
                first = false;
                continue;
            }
            first = false;
            merged << line << '\n';
        }
    }
    std::istringstream in(merged.str());
    std::vector<routing::RoutingDistribution> dists;
    try {
        dists = routing::read_routing_counts(in);
    } catch (const ParseError& e) {
        throw DataError(e.what());
    }
    std::size_t n = 0;
    for (const auto& d : dists) n = std::max(n, d.probs.size());

    std::vector<std::unique_ptr<OutputFile>> pending;
    auto dev = std::make_unique<OutputFile>(a.out, *ctx.out);
    dev->stream() << "config_id\tdomain\trank\texpert_id\tdelta\n";
    std::vector<std::tuple<std::string, std::string, std::size_t, double>> plot_delta;
    if (!a.baseline.empty()) {
        bool found = false;
        for (const auto& base : dists) {
            if (base.config_id != a.baseline) continue;
            found = true;
            for (const auto& d : dists) {
                if (d.config_id == a.baseline || d.domain != base.domain) continue;
                const auto rep = routing::deviation_report(d, base, a.top_k);
                for (std::size_t r = 0; r < rep.top.size(); ++r)
                    dev->stream() << d.config_id << '\t' << d.domain << '\t' << r + 1 << '\t' << rep.top[r] << '\t'
                                  << fmt(rep.delta[rep.top[r]]) << '\n';
                for (std::size_t i = 0; i < rep.delta.size(); ++i)
                    plot_delta.emplace_back(d.config_id, d.domain, i, rep.delta[i]);
            }
        }
        if (!found) throw ConfigError("baseline config " + a.baseline + " not found in the routing counts");
    }
    pending.push_back(std::move(dev));
    if (!a.js.empty()) {
        const auto matrix = routing::pairwise_js(dists, ctx.exec());
        auto f = std::make_unique<OutputFile>(a.js, *ctx.out);
        f->stream() << "distribution";
        for (const auto& d : dists) f->stream() << '\t' << d.config_id << '/' << d.domain;
        f->stream() << '\n';
        for (std::size_t i = 0; i < dists.size(); ++i) {
            f->stream() << dists[i].config_id << '/' << dists[i].domain;
            for (double v : matrix[i]) f->stream() << '\t' << fmt(v);
            f->stream() << '\n';
        }
        pending.push_back(std::move(f));
    }
    if (!a.plot_data.empty()) {
        auto f = std::make_unique<OutputFile>(a.plot_data, *ctx.out);
        f->stream() << "series\tconfig_id\tdomain\texpert_id\tvalue\n";
        for (const auto& d : dists)
            for (std::size_t i = 0; i < d.probs.size(); ++i)
                f->stream() << "prob\t" << d.config_id << '\t' << d.domain << '\t' << i << '\t' << fmt(d.probs[i])
                            << '\n';
        for (const auto& [c, dom, i, v] : plot_delta)
            f->stream() << "delta\t" << c << '\t' << dom << '\t' << i << '\t' << fmt(v) << '\n';
        pending.push_back(std::move(f));
    }
    commit_all(pending);
    ctx.summary.in = ctx.summary.kept = dists.size();
}

struct AggregateArgs {
    std::string input, out;
};

void cmd_aggregate(Context& ctx, const AggregateArgs& a) {
    require_readable({a.input});
    require_writable_dirs({a.out});
    std::ifstream in(a.input);
    std::map<std::string, std::vector<std::optional<double>>> groups;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::is_blank(line) || line.starts_with('#')) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, '\t')) fields.push_back(f);
        if (!line.empty() && line.back() == '\t') fields.emplace_back();
        if (fields.size() < 2 || fields.size() > 3) {
            *ctx.err << a.input << ": line " << line_no << ": expected [config_id<TAB>]benchmark<TAB>score\n";
            ++ctx.summary.data_errors;
            continue;
        }
        const std::string group = fields.size() == 3 ? fields[0] : "all";
        const auto value = std::string(text::trim(fields.back()));
        if (value.empty() || value == "-" || value == "NA" || value == "nan") {
            groups[group].push_back(std::nullopt);
            continue;
        }
        try {
            groups[group].push_back(parse_double(value, fields[fields.size() - 2]));
        } catch (const ConfigError&) {
            if (line_no == 1) continue;  // header row
            *ctx.err << a.input << ": line " << line_no << ": bad score " << value << '\n';
            ++ctx.summary.data_errors;
        }
    }
    OutputFile f(a.out, *ctx.out);
    f.stream() << "config_id\tmean\tbenchmarks\n";
    for (const auto& [group, scores] : groups) {
        const auto present = static_cast<std::size_t>(
            std::count_if(scores.begin(), scores.end(), [](const auto& s) { return s.has_value(); }));
        if (present == 0) {
            *ctx.err << "no scores available for " << group << '\n';
            ++ctx.summary.data_errors;
            continue;
        }
        f.stream() << group << '\t' << fmt(routing::aggregate_capability_score(scores)) << '\t' << present << '\n';
        ++ctx.summary.kept;
    }
    f.commit();
    ctx.summary.in = groups.size();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Corpus curation and routing analysis toolkit", "curate"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML config file; sections named after subcommands")->envname("CURATE_CONFIG");

    Context ctx;
    ctx.out = &out;
    ctx.err = &err;
    app.add_option("--seed", ctx.seed, "Run seed for every random substream")->capture_default_str();
    app.add_option("--threads", ctx.threads, "Worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
    app.add_flag("--serial", ctx.serial, "Use the serial reference kernels");
    app.add_flag("--timing", ctx.timing, "Report wall time in the summary");

    std::function<void()> action;
    auto sub = [&](const std::string& name, const std::string& help, auto handler, auto& args_struct) {
        auto* s = app.add_subcommand(name, help);
        s->callback([&ctx, &action, handler, &args_struct] { action = [&ctx, handler, &args_struct] { handler(ctx, args_struct); }; });
        return s;
    };

    FilterCodeArgs fc;
    auto* s_fc = sub("filter-code", "Apply the per-language code cleaning rules", cmd_filter_code, fc);
    s_fc->add_option("--input", fc.input, "Documents (JSON lines)")->required();
    s_fc->add_option("--rules", fc.rules, "Language rule overrides (JSON)");
    s_fc->add_option("--out", fc.out, "Report TSV (default stdout)");
    s_fc->add_option("--kept", fc.kept, "Write kept documents here");
    s_fc->add_option("--radius", fc.radius, "SimHash Hamming radius")->check(CLI::Range(0u, code::DedupIndex::kMaxRadius));
    s_fc->add_option("--index-in", fc.index_in, "Load a dedup index");
    s_fc->add_option("--index-out", fc.index_out, "Save the dedup index");
    s_fc->add_flag("--domain-scope", fc.domain_scope, "Filter only code/code_nl documents; pass the rest through");

    ValidateMathArgs vm;
    auto* s_vm = sub("validate-math", "Validate LaTeX math documents", cmd_validate_math, vm);
    s_vm->add_option("--input", vm.input)->required();
    s_vm->add_option("--out", vm.out);
    s_vm->add_option("--kept", vm.kept);
    s_vm->add_flag("--domain-scope", vm.domain_scope, "Validate only math documents; pass the rest through");
    s_vm->add_option("--min-failed", vm.min_failed)->capture_default_str();
    s_vm->add_option("--max-formula-ratio", vm.max_formula_ratio)->capture_default_str();
    s_vm->add_flag("--variable-heuristic", vm.variable_heuristic);
    s_vm->add_option("--extra-command", vm.extra_commands, "Additional known command (repeatable)");
    s_vm->add_option("--marker", vm.markers, "Placeholder marker (repeatable)");

    ClassifyArgs cd;
    auto* s_cd = sub("classify-domain", "Assign domain labels", cmd_classify_domain, cd);
    s_cd->add_option("--input", cd.input)->required();
    s_cd->add_option("--out", cd.out, "TSV of doc_id, label, density");
    s_cd->add_option("--annotate", cd.annotate, "Write documents with the domain field set");
    s_cd->add_option("--rules", cd.rules);
    s_cd->add_option("--density-threshold", cd.density_threshold)->capture_default_str();
    s_cd->add_option("--max-prose-run", cd.max_prose_run)->capture_default_str();
    s_cd->add_option("--min-code-lines", cd.min_code_lines)->capture_default_str();
    s_cd->add_option("--boilerplate-min-docs", cd.boilerplate_min_docs)->capture_default_str();

    TrainArgs tr;
    auto* s_tr = sub("train-scaffold", "Train the structural classifier", cmd_train, tr);
    s_tr->add_option("--positives", tr.positives);
    s_tr->add_option("--negatives", tr.negatives);
    s_tr->add_option("--input", tr.input, "Labeled documents");
    s_tr->add_option("--model", tr.model)->required();
    s_tr->add_option("--loss-out", tr.loss_out);
    s_tr->add_option("--epochs", tr.epochs)->capture_default_str();
    s_tr->add_option("--lr", tr.lr)->capture_default_str();
    s_tr->add_option("--dim", tr.dim)->capture_default_str();
    s_tr->add_option("--buckets", tr.buckets)->capture_default_str();
    s_tr->add_option("--word-ngrams", tr.word_ngrams)->capture_default_str();
    s_tr->add_option("--char-min", tr.char_min)->capture_default_str();
    s_tr->add_option("--char-max", tr.char_max)->capture_default_str();
    s_tr->add_flag("--parallel-train", tr.parallel_train, "Sharded training; not bit-reproducible across thread counts");

    CalibrateArgs ca;
    auto* s_ca = sub("calibrate", "Calibrate the decision threshold", cmd_calibrate, ca);
    s_ca->add_option("--model", ca.model)->required();
    s_ca->add_option("--validation", ca.validation)->required();
    s_ca->add_option("--floor", ca.floor)->capture_default_str();
    s_ca->add_option("--out", ca.out, "Calibrated model (default: overwrite --model)");
    s_ca->add_option("--report", ca.report);

    SelectArgs se;
    auto* s_se = sub("select-scaffolds", "Select structured math documents", cmd_select, se);
    s_se->add_option("--model", se.model)->required();
    s_se->add_option("--input", se.input)->required();
    s_se->add_option("--out", se.out);
    s_se->add_option("--rejected", se.rejected);
    s_se->add_option("--tau", se.tau);
    s_se->add_flag("--domain-scope", se.domain_scope, "Consider only math documents");

    StatsArgs st;
    auto* s_st = sub("scaffold-stats", "Structural statistics per document set", cmd_stats, st);
    s_st->add_option("--input", st.inputs)->required();
    s_st->add_option("--out", st.out);

    AuditArgs au;
    auto* s_au = sub("audit", "Contamination audit of selected documents", cmd_audit, au);
    s_au->add_option("--input", au.input)->required();
    s_au->add_option("--out", au.out);

    EvaluateArgs ev;
    auto* s_ev = sub("evaluate", "Classifier metrics on labeled documents", cmd_evaluate, ev);
    s_ev->add_option("--model", ev.model)->required();
    s_ev->add_option("--input", ev.input)->required();
    s_ev->add_option("--tau", ev.tau);
    s_ev->add_option("--out", ev.out);

    auto add_cutoffs = [](CLI::App* s, CutoffArgs& c) {
        s->add_option("--admit", c.admit)->capture_default_str();
        s->add_option("--mid", c.mid)->capture_default_str();
        s->add_option("--high", c.high)->capture_default_str();
    };

    StratifyArgs sf;
    auto* s_sf = sub("stratify", "Assign quality tiers", cmd_stratify, sf);
    s_sf->add_option("--input", sf.input)->required();
    s_sf->add_option("--out", sf.out);
    add_cutoffs(s_sf, sf.cutoffs);

    MixPlanArgs mp;
    auto* s_mp = sub("mix-plan", "Plan a fixed-budget mixture", cmd_mix_plan, mp);
    s_mp->add_option("--input", mp.input, "Annotated documents to count tokens from");
    s_mp->add_option("--available", mp.available, "domain=tokens (repeatable)");
    s_mp->add_option("--weights", mp.weights, "domain=weight (repeatable)")->required();
    s_mp->add_option("--budget", mp.budget)->required();
    s_mp->add_option("--out", mp.out);

    AblateArgs ab;
    auto* s_ab = sub("ablate", "Remove a domain and upsample the rest", cmd_ablate, ab);
    s_ab->add_option("--plan", ab.plan)->required();
    s_ab->add_option("--domain", ab.domain)->required();
    s_ab->add_option("--out", ab.out);

    ReplaceArgs rp;
    auto* s_rp = sub("replace", "Source part of a domain from a subset", cmd_replace, rp);
    s_rp->add_option("--plan", rp.plan)->required();
    s_rp->add_option("--domain", rp.domain)->required();
    s_rp->add_option("--subset", rp.subset)->required();
    s_rp->add_option("--subset-tokens", rp.subset_tokens);
    s_rp->add_option("--subset-input", rp.subset_input);
    s_rp->add_option("--fraction", rp.fraction)->required();
    s_rp->add_option("--out", rp.out);

    SampleArgs sa;
    auto* s_sa = sub("sample", "Sample a document manifest from a plan", cmd_sample, sa);
    s_sa->add_option("--plan", sa.plan)->required();
    s_sa->add_option("--input", sa.input)->required();
    s_sa->add_option("--subset", sa.subsets, "name=documents.jsonl (repeatable)");
    s_sa->add_option("--out", sa.out);
    s_sa->add_option("--w-high", sa.w_high)->capture_default_str();
    s_sa->add_option("--w-medium", sa.w_medium)->capture_default_str();
    s_sa->add_option("--w-low", sa.w_low)->capture_default_str();
    s_sa->add_option("--max-epochs", sa.max_epochs)->capture_default_str();
    add_cutoffs(s_sa, sa.cutoffs);

    SimulateArgs sm;
    auto* s_sm = sub("simulate-router", "Simulate MoE routing with warmup", cmd_simulate, sm);
    s_sm->add_option("--experts", sm.experts)->capture_default_str();
    s_sm->add_option("--topk", sm.top_k)->capture_default_str();
    s_sm->add_option("--warmup", sm.warmup)->capture_default_str();
    s_sm->add_option("--steps", sm.steps)->capture_default_str();
    s_sm->add_option("--tokens", sm.tokens)->capture_default_str();
    s_sm->add_option("--dim", sm.dim)->capture_default_str();
    s_sm->add_option("--score-fn", sm.score_fn)->check(CLI::IsMember({"softmax", "sigmoid"}))->capture_default_str();
    s_sm->add_option("--noise-seed", sm.noise_seed, "Defaults to --seed");
    s_sm->add_option("--bias-expert", sm.bias_expert);
    s_sm->add_option("--bias", sm.bias)->capture_default_str();
    s_sm->add_option("--momentum", sm.momentum)->capture_default_str();
    s_sm->add_flag("--renormalize", sm.renormalize);
    s_sm->add_option("--out", sm.out, "Per-step summary TSV");
    s_sm->add_option("--trace", sm.trace, "Per-step routing records (JSON lines)");
    s_sm->add_option("--counts", sm.counts, "Expert counts TSV for analyze-routing");
    s_sm->add_option("--config-id", sm.config_id)->capture_default_str();
    s_sm->add_option("--domain", sm.domain)->capture_default_str();

    AnalyzeArgs an;
    auto* s_an = sub("analyze-routing", "Routing deviations and JS divergence", cmd_analyze, an);
    s_an->add_option("--input", an.inputs)->required();
    s_an->add_option("--baseline", an.baseline);
    s_an->add_option("--top-k", an.top_k)->capture_default_str();
    s_an->add_option("--out", an.out, "Deviation TSV");
    s_an->add_option("--js", an.js, "JS divergence matrix TSV");
    s_an->add_option("--plot-data", an.plot_data, "Long-format records for plotting");

    AggregateArgs ag;
    auto* s_ag = sub("aggregate-scores", "Mean of available benchmark scores", cmd_aggregate, ag);
    s_ag->add_option("--input", ag.input)->required();
    s_ag->add_option("--out", ag.out);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    set_thread_count(ctx.threads);
    const auto start = std::chrono::steady_clock::now();
    try {
        action();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        ++ctx.summary.data_errors;
        err << emit_summary(ctx.summary);
        return 1;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    if (ctx.timing)
        ctx.summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    err << emit_summary(ctx.summary);
    return ctx.summary.data_errors > 0 ? 1 : 0;
}

}  // namespace curate::cli
