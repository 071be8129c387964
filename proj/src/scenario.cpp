// SPDX-License-Identifier: Apache-2.0

#include "tcda/scenario.hpp"

#include "tcda/seed.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace tcda
{
    using nlohmann::json;

    ConfigError::ConfigError(std::string key, const std::string &what)
        : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key))
    {
    }

    std::pair<std::size_t, std::size_t> split_fault_count(std::size_t total, double x_share)
    {
        const auto z = static_cast<std::size_t>(std::floor(static_cast<double>(total) * (1.0 - x_share)));
        return {total - std::min(z, total), std::min(z, total)};
    }

    namespace
    {
        std::string join(const std::string &path, const std::string &key)
        {
            return path.empty() ? key : path + "." + key;
        }

        // Object view that remembers which keys were read so leftovers can be
        // reported as unknown.
        class Section
        {
        public:
            Section(const json &j, std::string path) : j_(j), path_(std::move(path))
            {
                if (!j_.is_object())
                    throw ConfigError(path_, "expected an object");
            }

            const json *find(const std::string &key)
            {
                seen_.insert(key);
                auto it = j_.find(key);
                return it == j_.end() ? nullptr : &*it;
            }

            const json &require(const std::string &key)
            {
                const json *v = find(key);
                if (!v)
                    throw ConfigError(join(path_, key), "missing required key");
                return *v;
            }

            std::string path(const std::string &key) const { return join(path_, key); }

            void finish() const
            {
                for (auto it = j_.begin(); it != j_.end(); ++it)
                    if (!seen_.count(it.key()))
                        throw ConfigError(join(path_, it.key()), "unknown key");
            }

        private:
            const json &j_;
            std::string path_;
            std::set<std::string> seen_;
        };

        std::uint64_t as_uint(const json &v, const std::string &path)
        {
            if (v.is_number_unsigned())
                return v.get<std::uint64_t>();
            if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
                return static_cast<std::uint64_t>(v.get<std::int64_t>());
            throw ConfigError(path, "expected a non-negative integer");
        }

        double as_double(const json &v, const std::string &path)
        {
            if (v.is_number())
                return v.get<double>();
            if (v.is_string())
            {
                const auto &s = v.get_ref<const std::string &>();
                if (s == "inf")
                    return std::numeric_limits<double>::infinity();
                if (s == "-inf")
                    return -std::numeric_limits<double>::infinity();
            }
            throw ConfigError(path, "expected a number");
        }

        std::string as_string(const json &v, const std::string &path)
        {
            if (!v.is_string())
                throw ConfigError(path, "expected a string");
            return v.get<std::string>();
        }

        const json &as_array(const json &v, const std::string &path)
        {
            if (!v.is_array())
                throw ConfigError(path, "expected an array");
            return v;
        }

        std::vector<std::size_t> as_index_list(const json &v, const std::string &path)
        {
            std::vector<std::size_t> out;
            std::size_t i = 0;
            for (const auto &e : as_array(v, path))
                out.push_back(as_uint(e, path + "[" + std::to_string(i++) + "]"));
            return out;
        }

        json number(double x)
        {
            if (std::isinf(x))
                return x > 0 ? "inf" : "-inf";
            return x;
        }

        const char *waveform_name(WaveformModel w)
        {
            return w == WaveformModel::gaussian ? "gaussian" : "orthogonal_tones";
        }

        json to_json(const Scenario &s, bool with_output)
        {
            json j;
            j["name"] = s.name;
            j["array"] = {{"elements", s.geometry.elements},
                          {"subarray_x", s.subarray.lx1},
                          {"subarray_z", s.subarray.lz1}};
            json src = json::array();
            for (const auto &p : s.sources)
                src.push_back({{"azimuth_deg", p.azimuth_phi_deg},
                               {"elevation_deg", p.elevation_theta_deg},
                               {"power", p.power}});
            j["sources"] = src;
            json snr = json::array();
            for (double x : s.snr_db)
                snr.push_back(number(x));
            j["snr_db"] = snr;
            j["snapshots"] = s.snapshots;
            j["waveform"] = waveform_name(s.waveform);
            if (const auto *e = std::get_if<ExplicitFaults>(&s.faults))
                j["faults"] = {{"explicit", {{"dead_x", e->dead_x}, {"dead_z", e->dead_z}}}};
            else
            {
                const auto &r = std::get<RandomFaults>(s.faults);
                j["faults"] = {{"random", {{"counts", r.counts}, {"x_share", r.x_share}}}};
            }
            if (s.detector.kind == DetectorKind::oracle)
                j["detector"] = {{"kind", "oracle"}};
            else
                j["detector"] = {
                    {"kind", "blind"}, {"gamma", s.detector.blind.gamma}, {"epsilon", s.detector.blind.epsilon}};
            j["solver"] = {{"rank", s.solver.rank},
                           {"max_iters", s.solver.max_iters},
                           {"rel_fit_tol", s.solver.rel_fit_tol},
                           {"lambda_reg", s.solver.lambda_reg ? json(*s.solver.lambda_reg) : json(nullptr)},
                           {"restarts", s.solver.restarts},
                           {"screen_starts", s.solver.screen_starts},
                           {"screen_sweeps", s.solver.screen_sweeps}};
            j["trials"] = s.trials;
            j["seed"] = s.seed;
            j["seeding"] = s.seeding == Seeding::paired ? "paired" : "per_cell";
            if (with_output)
                j["output"] = s.output;
            return j;
        }

        Scenario from_json(const json &root)
        {
            Scenario s;
            Section top(root, "");

            if (const json *v = top.find("name"))
                s.name = as_string(*v, "name");

            {
                Section a(top.require("array"), "array");
                s.geometry.elements = as_uint(a.require("elements"), a.path("elements"));
                s.subarray = SubarrayConfig::defaults_for(std::max<std::size_t>(s.geometry.elements, 4));
                s.subarray.elements = s.geometry.elements;
                if (const json *v = a.find("subarray_x"))
                    s.subarray.lx1 = as_uint(*v, a.path("subarray_x"));
                if (const json *v = a.find("subarray_z"))
                    s.subarray.lz1 = as_uint(*v, a.path("subarray_z"));
                a.finish();
            }

            {
                const json &list = as_array(top.require("sources"), "sources");
                for (std::size_t i = 0; i < list.size(); ++i)
                {
                    Section e(list[i], "sources[" + std::to_string(i) + "]");
                    SourceParams p;
                    p.azimuth_phi_deg = as_double(e.require("azimuth_deg"), e.path("azimuth_deg"));
                    p.elevation_theta_deg = as_double(e.require("elevation_deg"), e.path("elevation_deg"));
                    if (const json *v = e.find("power"))
                        p.power = as_double(*v, e.path("power"));
                    e.finish();
                    s.sources.push_back(p);
                }
            }

            if (const json *v = top.find("snr_db"))
            {
                s.snr_db.clear();
                if (v->is_array())
                    for (std::size_t i = 0; i < v->size(); ++i)
                        s.snr_db.push_back(as_double((*v)[i], "snr_db[" + std::to_string(i) + "]"));
                else
                    s.snr_db.push_back(as_double(*v, "snr_db"));
            }
            if (const json *v = top.find("snapshots"))
                s.snapshots = as_uint(*v, "snapshots");
            if (const json *v = top.find("waveform"))
            {
                const auto w = as_string(*v, "waveform");
                if (w == "gaussian")
                    s.waveform = WaveformModel::gaussian;
                else if (w == "orthogonal_tones")
                    s.waveform = WaveformModel::orthogonal_tones;
                else
                    throw ConfigError("waveform", "expected \"gaussian\" or \"orthogonal_tones\", got \"" + w + "\"");
            }

            if (const json *v = top.find("faults"))
            {
                Section f(*v, "faults");
                const json *ex = f.find("explicit");
                const json *rnd = f.find("random");
                f.finish();
                if ((ex != nullptr) == (rnd != nullptr))
                    throw ConfigError("faults", "expected exactly one of \"explicit\" or \"random\"");
                if (ex)
                {
                    Section e(*ex, "faults.explicit");
                    ExplicitFaults spec;
                    if (const json *d = e.find("dead_x"))
                        spec.dead_x = as_index_list(*d, e.path("dead_x"));
                    if (const json *d = e.find("dead_z"))
                        spec.dead_z = as_index_list(*d, e.path("dead_z"));
                    e.finish();
                    s.faults = spec;
                }
                else
                {
                    Section r(*rnd, "faults.random");
                    RandomFaults spec;
                    spec.counts = as_index_list(r.require("counts"), r.path("counts"));
                    if (const json *d = r.find("x_share"))
                        spec.x_share = as_double(*d, r.path("x_share"));
                    r.finish();
                    s.faults = spec;
                }
            }

            if (const json *v = top.find("detector"))
            {
                Section d(*v, "detector");
                const auto kind = as_string(d.require("kind"), d.path("kind"));
                if (kind == "oracle")
                    s.detector.kind = DetectorKind::oracle;
                else if (kind == "blind")
                {
                    s.detector.kind = DetectorKind::blind;
                    if (const json *g = d.find("gamma"))
                        s.detector.blind.gamma = as_double(*g, d.path("gamma"));
                    if (const json *e = d.find("epsilon"))
                        s.detector.blind.epsilon = as_double(*e, d.path("epsilon"));
                }
                else
                    throw ConfigError(d.path("kind"), "expected \"oracle\" or \"blind\", got \"" + kind + "\"");
                d.finish();
            }

            s.solver = benchmark_solver(s.sources.size());
            if (const json *v = top.find("solver"))
            {
                Section o(*v, "solver");
                if (const json *x = o.find("rank"))
                    s.solver.rank = as_uint(*x, o.path("rank"));
                if (const json *x = o.find("max_iters"))
                    s.solver.max_iters = as_uint(*x, o.path("max_iters"));
                if (const json *x = o.find("rel_fit_tol"))
                    s.solver.rel_fit_tol = as_double(*x, o.path("rel_fit_tol"));
                if (const json *x = o.find("lambda_reg"); x && !x->is_null())
                    s.solver.lambda_reg = as_double(*x, o.path("lambda_reg"));
                if (const json *x = o.find("restarts"))
                    s.solver.restarts = as_uint(*x, o.path("restarts"));
                if (const json *x = o.find("screen_starts"))
                    s.solver.screen_starts = as_uint(*x, o.path("screen_starts"));
                if (const json *x = o.find("screen_sweeps"))
                    s.solver.screen_sweeps = as_uint(*x, o.path("screen_sweeps"));
                o.finish();
            }

            if (const json *v = top.find("trials"))
                s.trials = as_uint(*v, "trials");
            if (const json *v = top.find("seed"))
                s.seed = as_uint(*v, "seed");
            if (const json *v = top.find("seeding"))
            {
                const auto m = as_string(*v, "seeding");
                if (m == "paired")
                    s.seeding = Seeding::paired;
                else if (m == "per_cell")
                    s.seeding = Seeding::per_cell;
                else
                    throw ConfigError("seeding", "expected \"paired\" or \"per_cell\", got \"" + m + "\"");
            }
            if (const json *v = top.find("output"))
                s.output = as_string(*v, "output");
            top.finish();
            return s;
        }

        void check_dead_list(const std::vector<std::size_t> &dead, std::size_t elements, const std::string &path)
        {
            std::set<std::size_t> seen;
            for (std::size_t i = 0; i < dead.size(); ++i)
            {
                if (dead[i] >= elements)
                    throw ConfigError(path + "[" + std::to_string(i) + "]",
                                      "element index " + std::to_string(dead[i]) + " out of range for " +
                                          std::to_string(elements) + " elements");
                if (!seen.insert(dead[i]).second)
                    throw ConfigError(path + "[" + std::to_string(i) + "]", "duplicate element index");
            }
            if (dead.size() >= elements)
                throw ConfigError(path, "every element of the axis is dead");
        }
    } // namespace

    void Scenario::validate() const
    {
        const std::size_t m = geometry.elements;
        if (m < 4)
            throw ConfigError("array.elements", "need at least 4 elements per axis");
        if (subarray.elements != m)
            throw ConfigError("array", "subarray configuration does not match the element count");
        if (subarray.lx1 < 2 || subarray.lx1 > m - 1)
            throw ConfigError("array.subarray_x", "subarray length must lie in [2, " + std::to_string(m - 1) + "]");
        if (subarray.lz1 < 2 || subarray.lz1 > m - 1)
            throw ConfigError("array.subarray_z", "subarray length must lie in [2, " + std::to_string(m - 1) + "]");

        if (sources.empty())
            throw ConfigError("sources", "at least one source is required");
        if (sources.size() > 8)
            throw ConfigError("sources", "at most 8 sources are supported");
        for (std::size_t i = 0; i < sources.size(); ++i)
        {
            const auto &p = sources[i];
            const std::string at = "sources[" + std::to_string(i) + "]";
            if (!(p.azimuth_phi_deg > 0.0 && p.azimuth_phi_deg < 180.0))
                throw ConfigError(at + ".azimuth_deg", "angle must lie strictly between 0 and 180 degrees");
            if (!(p.elevation_theta_deg > 0.0 && p.elevation_theta_deg < 180.0))
                throw ConfigError(at + ".elevation_deg", "angle must lie strictly between 0 and 180 degrees");
            if (!(p.power >= 0.0) || !std::isfinite(p.power))
                throw ConfigError(at + ".power", "power must be finite and non-negative");
        }

        if (snr_db.empty())
            throw ConfigError("snr_db", "at least one SNR value is required");
        for (std::size_t i = 0; i < snr_db.size(); ++i)
            if (std::isnan(snr_db[i]) || snr_db[i] == -std::numeric_limits<double>::infinity())
                throw ConfigError("snr_db[" + std::to_string(i) + "]", "SNR must be a number or \"inf\"");
        if (snapshots < 1)
            throw ConfigError("snapshots", "need at least one snapshot");

        if (const auto *e = std::get_if<ExplicitFaults>(&faults))
        {
            check_dead_list(e->dead_x, m, "faults.explicit.dead_x");
            check_dead_list(e->dead_z, m, "faults.explicit.dead_z");
        }
        else
        {
            const auto &r = std::get<RandomFaults>(faults);
            if (r.counts.empty())
                throw ConfigError("faults.random.counts", "at least one fault count is required");
            if (!(r.x_share >= 0.0 && r.x_share <= 1.0))
                throw ConfigError("faults.random.x_share", "must lie in [0, 1]");
            for (std::size_t i = 0; i < r.counts.size(); ++i)
            {
                const auto [fx, fz] = split_fault_count(r.counts[i], r.x_share);
                if (fx >= m || fz >= m)
                    throw ConfigError("faults.random.counts[" + std::to_string(i) + "]",
                                      "split " + std::to_string(fx) + "+" + std::to_string(fz) +
                                          " leaves an axis without live elements");
            }
        }

        if (detector.kind == DetectorKind::blind)
        {
            if (!(detector.blind.gamma > 0.0) || !std::isfinite(detector.blind.gamma))
                throw ConfigError("detector.gamma", "must be positive");
            if (!(detector.blind.epsilon >= 0.0) || !std::isfinite(detector.blind.epsilon))
                throw ConfigError("detector.epsilon", "must be non-negative");
        }

        try
        {
            solver.validate();
        }
        catch (const std::invalid_argument &e)
        {
            throw ConfigError("solver", e.what());
        }
        if (solver.rank != sources.size())
            throw ConfigError("solver.rank", "rank must equal the number of sources (" +
                                                 std::to_string(sources.size()) + ") for scoring");
        if (trials < 1)
            throw ConfigError("trials", "need at least one trial");
    }

    std::size_t Scenario::fault_cells() const
    {
        if (const auto *r = std::get_if<RandomFaults>(&faults))
            return r->counts.size();
        return 1;
    }

    std::pair<std::size_t, std::size_t> Scenario::fault_counts(std::size_t fault_index) const
    {
        if (fault_index >= fault_cells())
            throw std::out_of_range("fault cell index out of range");
        if (const auto *e = std::get_if<ExplicitFaults>(&faults))
            return {e->dead_x.size(), e->dead_z.size()};
        const auto &r = std::get<RandomFaults>(faults);
        return split_fault_count(r.counts[fault_index], r.x_share);
    }

    FaultMask Scenario::fault_mask(std::size_t fault_index, std::uint64_t placement_seed) const
    {
        if (const auto *e = std::get_if<ExplicitFaults>(&faults))
            return FaultMask::with_dead(geometry.elements, e->dead_x, e->dead_z);
        const auto [fx, fz] = fault_counts(fault_index);
        return random_fault_mask(geometry.elements, fx, fz, placement_seed);
    }

    SolverOptions benchmark_solver(std::size_t rank)
    {
        SolverOptions o;
        o.rank = rank;
        o.restarts = 4;
        o.screen_starts = 30;
        o.screen_sweeps = 20;
        return o;
    }

    std::vector<SourceParams> reference_sources()
    {
        return {{58.0, 66.0, 1.0}, {67.0, 130.0, 1.0}, {76.0, 86.0, 1.0}, {85.0, 105.0, 1.0}};
    }

    Scenario parse_scenario(const std::string &text)
    {
        json root;
        try
        {
            root = json::parse(text);
        }
        catch (const json::parse_error &e)
        {
            throw ConfigError("", std::string("malformed JSON: ") + e.what());
        }
        Scenario s = from_json(root);
        s.validate();
        return s;
    }

    Scenario load_scenario(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw ConfigError("", "cannot open scenario file " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_scenario(ss.str());
    }

    std::string serialize_scenario(const Scenario &s)
    {
        return to_json(s, true).dump(2) + "\n";
    }

    std::string scenario_hash(const Scenario &s)
    {
        const std::string text = to_json(s, false).dump();
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : text)
        {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    std::vector<std::string> preset_names()
    {
        return {"ideal", "moderate", "medium", "heavy", "very_heavy", "snr_sweep"};
    }

    Scenario preset_scenario(const std::string &name)
    {
        Scenario s;
        s.name = name;
        s.sources = reference_sources();
        s.solver = benchmark_solver(s.sources.size());
        s.snr_db = {10.0};

        // Placements calibrated with the oracle mask for M = 10, L = 6:
        // 9.84%, 29.6%, 39.52% and 59.4% of the 5000 target entries missing.
        if (name == "ideal")
            s.faults = ExplicitFaults{};
        else if (name == "moderate")
            s.faults = ExplicitFaults{{0}, {0, 1}};
        else if (name == "medium")
            s.faults = ExplicitFaults{{0, 2}, {0, 4}};
        else if (name == "heavy")
            s.faults = ExplicitFaults{{0, 3}, {2, 4}};
        else if (name == "very_heavy")
            s.faults = ExplicitFaults{{0, 2, 4}, {1, 4, 5}};
        else if (name == "snr_sweep")
        {
            s.snr_db = {-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0};
            s.faults = RandomFaults{{0, 2, 5, 8}, 0.5};
            s.trials = 50;
        }
        else
        {
            std::string known;
            for (const auto &n : preset_names())
                known += (known.empty() ? "" : ", ") + n;
            throw ConfigError("preset", "unknown preset \"" + name + "\" (known: " + known + ")");
        }
        s.validate();
        return s;
    }

} // namespace tcda
