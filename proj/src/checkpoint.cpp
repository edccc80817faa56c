#include "deltarank/checkpoint.hpp"

#include "deltarank/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace deltarank {

using nlohmann::json;

nlohmann::json config_to_json(const ModelConfig& c)
{
    return json{{"doc_width", c.doc_width},
                {"query_width", c.query_width},
                {"embedding_dim", c.embedding_dim},
                {"conv_layers", c.conv_layers},
                {"kernel_width", c.kernel_width},
                {"stride", c.stride},
                {"filters", c.filters},
                {"hidden", c.hidden},
                {"leaky_slope", c.leaky_slope},
                {"dropout", c.dropout},
                {"lexical_features", c.lexical_features},
                {"input", std::string(to_string(c.input))}};
}

ModelConfig config_from_json(const nlohmann::json& j, ModelConfig c)
{
    const auto take = [&j](const char* key, auto& field) {
        if (auto it = j.find(key); it != j.end()) {
            it->get_to(field);
        }
    };
    take("doc_width", c.doc_width);
    take("query_width", c.query_width);
    take("embedding_dim", c.embedding_dim);
    take("conv_layers", c.conv_layers);
    take("kernel_width", c.kernel_width);
    take("stride", c.stride);
    take("filters", c.filters);
    take("hidden", c.hidden);
    take("leaky_slope", c.leaky_slope);
    take("dropout", c.dropout);
    take("lexical_features", c.lexical_features);
    if (auto it = j.find("input"); it != j.end()) {
        c.input = delta_input_from_string(it->get<std::string>());
    }
    return c;
}

namespace {

void write_array(std::ostream& out, const std::vector<double>& values)
{
    char buf[40];
    out << '[';
    for (std::size_t k = 0; k < values.size(); ++k) {
        const int n = std::snprintf(buf, sizeof buf, k == 0 ? "%.17g" : ",%.17g", values[k]);
        out.write(buf, n);
    }
    out << ']';
}

void read_values(const json& array, Tensor& tensor, const std::string& what)
{
    if (!array.is_array() || array.size() != tensor.values.size()) {
        throw ValidationError(what + ": expected " + std::to_string(tensor.values.size()) + " values");
    }
    for (std::size_t k = 0; k < tensor.values.size(); ++k) {
        const double v = array[k].get<double>();
        if (!std::isfinite(v)) {
            throw ValidationError(what + ": non-finite value");
        }
        tensor.values[k] = v;
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << "{\"version\":" << kCheckpointVersion << ",\"config\":" << config_to_json(checkpoint.config).dump()
        << ",\"params\":{";
    bool first = true;
    for (const auto& t : checkpoint.params.tensors()) {
        out << (first ? "" : ",") << json(t.name).dump() << ":{\"shape\":" << json(t.shape).dump()
            << ",\"values\":";
        write_array(out, t.values);
        out << '}';
        first = false;
    }
    out << '}';
    if (checkpoint.adagrad) {
        out << ",\"adagrad\":{";
        first = true;
        for (const auto& t : checkpoint.adagrad->tensors()) {
            out << (first ? "" : ",") << json(t.name).dump() << ':';
            write_array(out, t.values);
            first = false;
        }
        out << '}';
    }
    out << "}\n";
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    const std::string source = path.string();
    std::ifstream in(path);
    if (!in) {
        throw ParseError(source, 0, "cannot open file");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(source, 1, std::string("malformed checkpoint: ") + e.what());
    }
    try {
        const int version = j.at("version").get<int>();
        if (version != kCheckpointVersion) {
            throw ValidationError(source + ": checkpoint version " + std::to_string(version) + ", expected " +
                                  std::to_string(kCheckpointVersion));
        }
        Checkpoint ck;
        ck.config = config_from_json(j.at("config"));
        ck.config.validate();
        ck.params = ModelParameters(ck.config);
        const json& params = j.at("params");
        if (params.size() != ck.params.tensors().size()) {
            throw ValidationError(source + ": checkpoint has " + std::to_string(params.size()) +
                                  " tensors, config implies " + std::to_string(ck.params.tensors().size()));
        }
        for (auto& t : ck.params.tensors()) {
            const json& entry = params.at(t.name);
            if (entry.at("shape").get<std::vector<std::size_t>>() != t.shape) {
                throw ValidationError(source + ": shape of " + t.name + " does not match its config");
            }
            read_values(entry.at("values"), t, source + ": " + t.name);
        }
        if (auto it = j.find("adagrad"); it != j.end()) {
            ModelParameters acc = ck.params.zeros_like();
            for (auto& t : acc.tensors()) {
                read_values(it->at(t.name), t, source + ": adagrad " + t.name);
            }
            ck.adagrad = std::move(acc);
        }
        return ck;
    } catch (const json::exception& e) {
        throw ParseError(source, 1, std::string("malformed checkpoint: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ValidationError(source + ": " + e.what());
    }
}

}  // namespace deltarank
