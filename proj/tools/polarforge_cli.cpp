// polarforge command-line driver.
//
// Exit codes: 0 success, 1 invalid arguments or configuration, 2 size mismatch
// between a data file and the code, 3 corrupt or unreadable code file,
// 4 an invariant or identity check failed.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <polarforge/concat.hpp>
#include <polarforge/construction.hpp>
#include <polarforge/parallel.hpp>
#include <polarforge/protocol.hpp>
#include <polarforge/qprobe.hpp>

using namespace polarforge;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1, kExitSize = 2, kExitCorrupt = 3, kExitCheck = 4;

struct ExitError : std::runtime_error {
    int code;
    ExitError(int c, const std::string& m) : std::runtime_error(m), code(c) {}
};

struct Common {
    std::string channel = "depolarizing:0.05";
    std::size_t L = 64, M = 64;
    std::optional<double> eps_inner, eps_outer, inner_rate, outer_rate, rate;
    std::size_t trials = 1000;
    std::size_t build_trials = 10000;
    std::optional<std::uint64_t> seed;
    std::string phase_mode = "decide";
    std::size_t samples = kDefaultMarginalSamples;
    double source_prior = 0.5;
    double shape_eps = 0.1;
    unsigned jobs = default_jobs();
    std::string out;
    std::string code_path;
    std::string checkpoint;
    std::size_t checkpoint_every = 1000;
    bool record_timing = false;
    bool quiet = false;
};

std::uint64_t resolve_seed(const Common& c) {
    if (c.seed) return *c.seed;
    if (const char* env = std::getenv("POLARFORGE_SEED")) {
        try {
            std::size_t used = 0;
            std::uint64_t v = std::stoull(env, &used);
            if (used == std::string(env).size()) return v;
        } catch (...) {
        }
        throw ExitError(kExitUsage, "POLARFORGE_SEED is not an unsigned integer");
    }
    return 1;
}

void add_code_flags(CLI::App* app, Common& c) {
    app->add_option("--channel", c.channel, "channel: depolarizing:p, dephasing:p, bitflip:p, pauli:pI,pX,pY,pZ, erasure:p, bsc:p, bec:p, identity")
        ->capture_default_str();
    app->add_option("--L", c.L, "inner block length (power of two)")->capture_default_str();
    app->add_option("--M", c.M, "outer block length (power of two)")->capture_default_str();
    app->add_option("--eps-inner", c.eps_inner, "freeze inner indices whose estimated error exceeds this (default 1e-3)");
    app->add_option("--eps-outer", c.eps_outer, "freeze outer indices whose estimated error exceeds this (default 1e-3)");
    app->add_option("--inner-rate", c.inner_rate, "fixed inner rate instead of --eps-inner");
    app->add_option("--outer-rate", c.outer_rate, "fixed rate pooled over all outer levels instead of --eps-outer");
    app->add_option("--rate", c.rate, "overall code rate; overrides the outer criterion");
    app->add_option("--build-trials", c.build_trials, "Monte Carlo trials for reliability estimation")->capture_default_str();
    app->add_option("--source-prior", c.source_prior, "P(x=1) of the source on bsc channels")->capture_default_str();
    app->add_option("--shape-eps", c.shape_eps, "with a biased source, also freeze inner positions whose source entropy is below 1 - this")
        ->capture_default_str();
}

void add_run_flags(CLI::App* app, Common& c) {
    app->add_option("--seed", c.seed, "master seed (falls back to POLARFORGE_SEED, then 1)");
    app->add_option("--phase-mode", c.phase_mode, "unknown inner values in the phase layer: exact, randomized, marginalized, decide")->capture_default_str();
    app->add_option("--samples", c.samples, "samples per estimate in marginalized mode")->capture_default_str();
    app->add_option("--jobs", c.jobs, "worker threads; results do not depend on it")->capture_default_str();
    app->add_option("--out", c.out, "output path (report JSON, code JSON, CSV or data file)");
    app->add_flag("--quiet", c.quiet, "no progress lines on stderr");
}

BuildOptions build_options(const Common& c) {
    BuildOptions o;
    if (c.eps_inner && c.inner_rate) throw ExitError(kExitUsage, "give at most one of --eps-inner and --inner-rate");
    if (c.eps_outer && c.outer_rate) throw ExitError(kExitUsage, "give at most one of --eps-outer and --outer-rate");
    if (c.inner_rate) o.inner = SelectCriterion::rate(*c.inner_rate);
    else o.inner = SelectCriterion::epsilon(c.eps_inner.value_or(1e-3));
    if (c.outer_rate) o.outer = SelectCriterion::rate(*c.outer_rate);
    else o.outer = SelectCriterion::epsilon(c.eps_outer.value_or(1e-3));
    o.overall_rate = c.rate;
    o.trials = c.build_trials;
    o.seed = resolve_seed(c);
    o.profile_mode = parse_phase_mode(c.phase_mode);
    o.n_samples = c.samples;
    o.source_prior = c.source_prior;
    o.shape_eps = c.shape_eps;
    o.jobs = std::max(1u, c.jobs);
    return o;
}

ConcatCode load_code(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ExitError(kExitCorrupt, "cannot read code file '" + path + "'");
    try {
        return code_from_json(json::parse(f));
    } catch (const std::exception& e) {
        throw ExitError(kExitCorrupt, "corrupt code file '" + path + "': " + e.what());
    }
}

ConcatCode code_for(const Common& c) {
    if (!c.code_path.empty()) return load_code(c.code_path);
    return build_concat_code(parse_channel_spec(c.channel), c.L, c.M, build_options(c));
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << text;
}

BitBlock read_bits_checked(const std::string& path) {
    try {
        return read_bit_file(path);
    } catch (const BitFileError& e) {
        throw ExitError(kExitSize, e.what());
    }
}

std::size_t blocks_of(std::size_t have, std::size_t unit, const std::string& what) {
    if (unit == 0) {
        if (have != 0) throw ExitError(kExitSize, what + ": the code carries no bits but the input is not empty");
        return 0;
    }
    if (have % unit != 0)
        throw ExitError(kExitSize, what + ": " + std::to_string(have) + " bits is not a multiple of " + std::to_string(unit));
    return have / unit;
}

/// Evidence about x from a side-information bit stream through the code's first-layer view.
EvidenceVector side_evidence(const ConcatCode& code, const BitBlock& y) {
    BinaryView v = inner_view(code.channel, code.source_prior);
    EvidenceVector ev(y.size());
    double l = kLlrClamp, prior = 0;
    if (auto* s = std::get_if<BinarySymmetricView>(&v)) {
        l = crossover_llr(s->crossover);
        prior = crossover_llr(s->prior_one);
    }
    for (std::size_t i = 0; i < y.size(); ++i) ev[i] = prior + (y[i] ? -l : l);
    return ev;
}

std::function<void(std::size_t, std::size_t)> progress_printer(const Common& c, const std::string& tag) {
    if (c.quiet) return {};
    return [tag](std::size_t done, std::size_t total) { std::cerr << tag << ": " << done << "/" << total << " trials\n"; };
}

CampaignConfig campaign_config(const Common& c, CampaignKind kind) {
    CampaignConfig cfg;
    cfg.kind = kind;
    cfg.trials = c.trials;
    cfg.seed = resolve_seed(c);
    cfg.trial.phase_mode = parse_phase_mode(c.phase_mode);
    cfg.trial.n_samples = c.samples;
    cfg.jobs = std::max(1u, c.jobs);
    cfg.checkpoint = c.checkpoint;
    cfg.checkpoint_every = c.checkpoint_every;
    cfg.record_timing = c.record_timing;
    return cfg;
}

/// Sanity assertions on a finished campaign; returns the names of failing ones.
std::vector<std::string> report_assertions(const TrialReport& r, const ConcatCode& code, std::size_t trials) {
    std::vector<std::string> bad;
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (r.counts.trials != trials) bad.push_back("trial_count");
    if (!in01(r.eps1_hat) || !in01(r.eps2_hat) || !in01(r.block_error)) bad.push_back("metric_range");
    if (r.counts.amp_block_errors > r.counts.trials * code.M) bad.push_back("amp_error_count");
    if (r.counts.phase_block_errors > r.counts.trials || r.counts.failures > r.counts.trials) bad.push_back("failure_count");
    if (r.counts.failures < r.counts.phase_block_errors) bad.push_back("failures_cover_phase_errors");
    if (std::fabs(r.rate - code.rate()) > 1e-12) bad.push_back("rate_matches_code");
    return bad;
}

int finish_checks(const std::vector<std::string>& bad) {
    for (auto& b : bad) std::cerr << "check failed: " << b << '\n';
    return bad.empty() ? 0 : kExitCheck;
}

// ---- subcommands -----------------------------------------------------------

int cmd_construct(const Common& c, const std::string& profile_csv) {
    ConcatCode code = build_concat_code(parse_channel_spec(c.channel), c.L, c.M, build_options(c));
    write_text(c.out.empty() ? "-" : c.out, code_to_json(code).dump(1) + "\n");
    if (!profile_csv.empty()) {
        std::ofstream f(profile_csv);
        write_profile_csv(f, inner_profile(code.channel, code.L, build_options(c)));
    }
    std::ostream& os = c.out.empty() ? std::cerr : std::cout;
    os << "rate " << code.rate() << " inner_frozen " << code.inner_frozen.size() << "/" << code.L << " outer_frozen "
       << code.outer_frozen_total() << "/" << code.K() * code.M << " message_bits " << code.message_length() << '\n';
    return 0;
}

int cmd_codec(const Common& c, const std::string& action, const std::string& in, const std::string& side) {
    if (c.code_path.empty()) throw ExitError(kExitUsage, "codec needs --code");
    if (c.out.empty()) throw ExitError(kExitUsage, "codec needs --out");
    ConcatCode code = load_code(c.code_path);
    const BitBlock input = read_bits_checked(in);
    const std::uint64_t seed = resolve_seed(c);
    BitBlock out;
    if (action == "encode" || action == "decode") {
        if (code.source_prior != 0.5) throw ExitError(kExitUsage, "file channel coding needs a uniform source prior");
        const bool enc = action == "encode";
        const std::size_t n = blocks_of(input.size(), enc ? code.message_length() : code.N(), action);
        const BitBlock zero(code.message_length(), 0);
        for (std::size_t b = 0; b < n; ++b) {
            // inner values come from the seed alone, so the decoder can regenerate them
            const std::uint64_t bs = substream(seed, b, 0xc0de);
            if (enc) {
                BitBlock msg(input.begin() + static_cast<std::ptrdiff_t>(b * code.message_length()),
                             input.begin() + static_cast<std::ptrdiff_t>((b + 1) * code.message_length()));
                Encoded e = concat_channel_encode(msg, code, bs);
                out.insert(out.end(), e.x.begin(), e.x.end());
            } else {
                BitBlock x(input.begin() + static_cast<std::ptrdiff_t>(b * code.N()), input.begin() + static_cast<std::ptrdiff_t>((b + 1) * code.N()));
                EvidenceVector ev(code.N());
                for (std::size_t i = 0; i < x.size(); ++i) ev[i] = x[i] ? -kLlrClamp : kLlrClamp;
                Encoded ref = concat_channel_encode(zero, code, bs);
                DecodeOptions o;
                o.mode = PhaseMode::Exact;
                BitBlock msg = concat_channel_decode(ev, ref.disclosed, code, o);
                out.insert(out.end(), msg.begin(), msg.end());
            }
        }
    } else if (action == "compress") {
        const std::size_t n = blocks_of(input.size(), code.N(), "compress");
        for (std::size_t b = 0; b < n; ++b) {
            BitBlock x(input.begin() + static_cast<std::ptrdiff_t>(b * code.N()), input.begin() + static_cast<std::ptrdiff_t>((b + 1) * code.N()));
            BitBlock p = flatten(concat_compress(x, code));
            out.insert(out.end(), p.begin(), p.end());
        }
    } else if (action == "decompress") {
        if (side.empty()) throw ExitError(kExitUsage, "decompress needs --side");
        const BitBlock y = read_bits_checked(side);
        const std::size_t n = blocks_of(y.size(), code.N(), "side information");
        if (input.size() != n * code.payload_length())
            throw ExitError(kExitSize, "payload has " + std::to_string(input.size()) + " bits, expected " + std::to_string(n * code.payload_length()));
        DecodeOptions o;
        o.mode = parse_phase_mode(c.phase_mode);
        o.n_samples = c.samples;
        for (std::size_t b = 0; b < n; ++b) {
            BitBlock yb(y.begin() + static_cast<std::ptrdiff_t>(b * code.N()), y.begin() + static_cast<std::ptrdiff_t>((b + 1) * code.N()));
            CompressedPayload p = unflatten(input, b * code.payload_length(), code);
            o.seed = substream(seed, b, 0xdec);
            DecompressResult r = concat_decompress(side_evidence(code, yb), p, code, o);
            if (r.x_hat.empty()) throw ExitError(kExitUsage, "decompress: phase mode does not reconstruct the block; use exact or decide");
            out.insert(out.end(), r.x_hat.begin(), r.x_hat.end());
        }
    } else {
        throw ExitError(kExitUsage, "unknown codec action '" + action + "'");
    }
    write_bit_file(c.out, out);
    return 0;
}

int cmd_campaign(const Common& c, CampaignKind kind) {
    ConcatCode code = code_for(c);
    CampaignConfig cfg = campaign_config(c, kind);
    cfg.progress = progress_printer(c, to_string(kind));
    TrialReport r = run_campaign(code, cfg);
    write_text(c.out.empty() ? "-" : c.out, report_to_json(r, campaign_config_json(cfg, code)).dump(1) + "\n");
    return finish_checks(report_assertions(r, code, cfg.trials));
}

int cmd_sweep(const Common& base, const std::string& param, const std::vector<std::string>& values, const std::string& kind_s,
              const std::string& report_path) {
    if (values.empty()) throw ExitError(kExitUsage, "sweep needs --values");
    const CampaignKind kind = kind_s == "channel" ? CampaignKind::ChannelCoding : CampaignKind::Distill;
    if (kind_s != "channel" && kind_s != "distill") throw ExitError(kExitUsage, "--kind must be distill or channel");
    std::vector<SweepRow> rows;
    json reports = json::array();
    std::vector<std::string> bad;
    for (const auto& v : values) {
        Common c = base;
        c.code_path.clear();
        try {
            if (param == "L") c.L = std::stoul(v);
            else if (param == "M") c.M = std::stoul(v);
            else if (param == "rate") c.rate = std::stod(v);
            else if (param == "eps-inner") c.eps_inner = std::stod(v);
            else if (param == "eps-outer") c.eps_outer = std::stod(v);
            else if (param == "inner-rate") c.inner_rate = std::stod(v);
            else if (param == "outer-rate") c.outer_rate = std::stod(v);
            else if (param == "noise") c.channel = base.channel.substr(0, base.channel.find(':')) + ":" + v;
            else throw ExitError(kExitUsage, "unknown sweep parameter '" + param + "'");
        } catch (const std::logic_error&) {
            throw ExitError(kExitUsage, "bad sweep value '" + v + "'");
        }
        ConcatCode code = code_for(c);
        CampaignConfig cfg = campaign_config(c, kind);
        cfg.checkpoint.clear();
        cfg.progress = progress_printer(c, param + "=" + v);
        TrialReport r = run_campaign(code, cfg);
        for (auto& b : report_assertions(r, code, cfg.trials)) bad.push_back(param + "=" + v + ": " + b);
        rows.push_back({param, v, r});
        reports.push_back(report_to_json(r, campaign_config_json(cfg, code)));
    }
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    write_text(base.out.empty() ? "-" : base.out, csv.str());
    if (!report_path.empty()) write_text(report_path, json{{"schema", 1}, {"param", param}, {"reports", reports}}.dump(1) + "\n");
    return finish_checks(bad);
}

json metrics_json(const ChannelMetrics& m) {
    return {{"h_amp", m.h_amp}, {"h_phase_given_amp", m.h_phase_given_amp}, {"z_param", m.z_param}, {"coherent_info", m.coherent_info}};
}

std::vector<FrozenSpec> probe_splits(std::size_t L, const std::string& frozen, std::size_t random_splits, Rng& rng) {
    std::vector<FrozenSpec> out;
    if (!frozen.empty()) {
        FrozenSpec f;
        if (frozen != "none") {
            std::stringstream ss(frozen);
            std::string tok;
            while (std::getline(ss, tok, ',')) f.indices.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
        }
        std::sort(f.indices.begin(), f.indices.end());
        f.values.assign(f.indices.size(), 0);
        out.push_back(f);
    }
    for (std::size_t k = 0; k < random_splits; ++k) {
        FrozenSpec f;
        for (std::uint32_t i = 0; i < L; ++i)
            if (rng.bit()) f.indices.push_back(i);
        f.values.assign(f.indices.size(), 0);
        out.push_back(f);
    }
    if (out.empty()) out.push_back(FrozenSpec{});
    return out;
}

int cmd_probe(const Common& c, const std::string& frozen, std::size_t random_splits, std::size_t cq_pairs) {
    const ChannelModel ch = parse_channel_spec(c.channel);
    const std::uint64_t seed = resolve_seed(c);
    Rng rng(substream(seed, 0, 0x9b));
    json states = json::array();
    std::vector<std::string> bad;
    for (const FrozenSpec& f : probe_splits(c.L, frozen, random_splits, rng)) {
        qprobe::StateBundle s = qprobe::build_states(ch, c.L, f);
        auto checks = qprobe::identity_checks(s, ch);
        for (auto& k : checks)
            if (!k.pass) bad.push_back(k.check);
        states.push_back({{"frozen", f.indices}, {"entropies", qprobe::to_json(qprobe::entropy_report(s))}, {"checks", qprobe::ledger_json(checks)}});
        if (!c.quiet) std::cerr << "probe: split of size " << f.size() << " done\n";
    }
    json cq = json::array();
    if (cq_pairs > 0) {
        auto checks = qprobe::cq_polarization_check(cq_pairs, substream(seed, 0, 0xc9));
        for (auto& k : checks)
            if (!k.pass) bad.push_back(k.check);
        cq = qprobe::ledger_json(checks);
    }
    json report = {{"schema", 1},
                   {"config", {{"channel", channel_to_json(ch)}, {"L", c.L}, {"frozen", frozen}, {"random_splits", random_splits}, {"cq_pairs", cq_pairs}}},
                   {"seed", seed},
                   {"metrics", metrics_json(closed_form_metrics(ch))},
                   {"states", states},
                   {"cq_checks", cq}};
    write_text(c.out.empty() ? "-" : c.out, report.dump(1) + "\n");
    return finish_checks(bad);
}

/// Splices a JSON config file into the argument list right after the
/// subcommand, so flags given on the command line (which come later) win.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (path.empty()) return args;
    std::ifstream f(path);
    if (!f) throw ExitError(kExitUsage, "cannot read config '" + path + "'");
    json j = json::parse(f, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ExitError(kExitUsage, "config '" + path + "' is not a JSON object");
    std::vector<std::string> extra;
    for (auto& [k, v] : j.items()) {
        const std::string flag = "--" + k;
        if (v.is_boolean()) {
            if (v.get<bool>()) extra.push_back(flag);
        } else if (v.is_array()) {
            std::string joined;
            for (auto& e : v) joined += (joined.empty() ? "" : ",") + (e.is_string() ? e.get<std::string>() : e.dump());
            extra.push_back(flag);
            extra.push_back(joined);
        } else {
            extra.push_back(flag);
            extra.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        }
    }
    const std::size_t at = args.empty() ? 0 : (args[0] == "codec" && args.size() > 1 ? 2 : 1);
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(std::min(at, args.size())), extra.begin(), extra.end());
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polarforge: concatenated polar codes for compression with side information, channel coding and distillation"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.footer(
        "Every command also accepts --config FILE.json whose keys are flag names without the leading dashes; "
        "flags on the command line override it.\n"
        "Exit codes: 0 success, 1 invalid arguments or configuration, 2 data size does not match the code, "
        "3 corrupt code file, 4 an invariant or identity check failed.\n"
        "Environment: POLARFORGE_SEED is used when --seed is absent.");

    Common c;
    std::string profile_csv, codec_action, codec_in, codec_side, sweep_param, sweep_kind = "distill", sweep_report, probe_frozen;
    std::vector<std::string> sweep_values;
    std::size_t random_splits = 0, cq_pairs = 0;

    auto* construct = app.add_subcommand("construct", "build a concatenated code and write it as JSON");
    add_code_flags(construct, c);
    add_run_flags(construct, c);
    construct->add_option("--trials", c.build_trials, "alias of --build-trials");
    construct->add_option("--profile-csv", profile_csv, "also write the inner reliability profile as CSV");

    auto* codec = app.add_subcommand("codec", "file codec on bit files (8-byte little-endian bit count, LSB-first packing)");
    codec->add_option("action", codec_action, "encode | decode | compress | decompress")->required()->check(CLI::IsMember({"encode", "decode", "compress", "decompress"}));
    codec->add_option("--code", c.code_path, "code JSON written by construct")->required();
    codec->add_option("--in", codec_in, "input bit file")->required();
    codec->add_option("--side", codec_side, "side-information bit file (decompress)");
    add_run_flags(codec, c);

    std::vector<CLI::App*> campaigns;
    auto* simulate = app.add_subcommand("simulate", "channel-coding campaign; writes a report JSON");
    auto* distill = app.add_subcommand("distill", "distillation campaign (amplitude then phase layer); writes a report JSON");
    auto* sweep = app.add_subcommand("sweep", "campaign over a list of values of one parameter; writes CSV");
    for (auto* s : {simulate, distill, sweep}) {
        add_code_flags(s, c);
        add_run_flags(s, c);
        s->add_option("--trials", c.trials, "campaign trials")->capture_default_str();
        s->add_option("--code", c.code_path, "use this code JSON instead of constructing one");
        s->add_flag("--record-timing", c.record_timing, "store wall-clock time in the report (makes it non-reproducible)");
    }
    for (auto* s : {simulate, distill}) {
        s->add_option("--checkpoint", c.checkpoint, "sidecar file for resumable campaigns");
        s->add_option("--checkpoint-every", c.checkpoint_every, "trials between checkpoints")->capture_default_str();
    }
    sweep->add_option("--param", sweep_param, "L, M, rate, eps-inner, eps-outer, inner-rate, outer-rate or noise")->required();
    sweep->add_option("--values", sweep_values, "comma-separated values")->delimiter(',')->required();
    sweep->add_option("--kind", sweep_kind, "distill or channel")->capture_default_str();
    sweep->add_option("--report", sweep_report, "also write all per-row reports as JSON");

    auto* probe = app.add_subcommand("probe", "exact entropy identities on small dense states (L <= 4) and cq-pair bounds");
    probe->add_option("--channel", c.channel, "pauli-type or erasure channel")->capture_default_str();
    probe->add_option("--L", c.L, "number of channel uses: 1, 2 or 4")->capture_default_str();
    probe->add_option("--frozen", probe_frozen, "comma-separated frozen positions, or 'none'");
    probe->add_option("--random-splits", random_splits, "additional random frozen sets")->capture_default_str();
    probe->add_option("--cq-pairs", cq_pairs, "random classical-quantum pairs for the polarization bounds")->capture_default_str();
    add_run_flags(probe, c);
    probe->remove_option(probe->get_option("--phase-mode"));
    probe->remove_option(probe->get_option("--samples"));

    try {
        std::vector<std::string> args = expand_config(argc, argv);
        std::reverse(args.begin(), args.end());  // CLI11 takes the vector in reverse order
        try {
            app.parse(args);
        } catch (const CLI::ParseError& e) {
            int rc = app.exit(e);
            return rc == 0 ? 0 : kExitUsage;
        }
        if (*construct) return cmd_construct(c, profile_csv);
        if (*codec) return cmd_codec(c, codec_action, codec_in, codec_side);
        if (*simulate) return cmd_campaign(c, CampaignKind::ChannelCoding);
        if (*distill) return cmd_campaign(c, CampaignKind::Distill);
        if (*sweep) return cmd_sweep(c, sweep_param, sweep_values, sweep_kind, sweep_report);
        if (*probe) return cmd_probe(c, probe_frozen, random_splits, cq_pairs);
    } catch (const ExitError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
