#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "oazr/checkpoint.hpp"
#include "oazr/model.hpp"

namespace oazr {

using nlohmann::json;

void save_model(const Model& model, const std::string& path) {
    save_checkpoint(model.params(), path);
    const ModelConfig& c = model.config();
    json meta;
    meta["classes"] = model.class_names;
    meta["config"] = {{"levels", c.levels},
                      {"branch_dim", c.branch_dim},
                      {"heads", c.heads},
                      {"encoder_dim", c.encoder_dim},
                      {"gcn_hidden", c.gcn_hidden},
                      {"tokens", c.tokens},
                      {"conv_kernel", c.conv_kernel},
                      {"conv_stride", c.conv_stride},
                      {"joint_dim", c.joint_dim},
                      {"text_dim", c.text_dim},
                      {"classifier_hidden", c.classifier_hidden},
                      {"num_classes", c.num_classes}};
    std::ofstream f(path + ".meta", std::ios::trunc);
    if (!f) throw std::runtime_error("model meta: cannot open for writing " + path + ".meta");
    f << meta.dump(2) << "\n";
    if (!f) throw std::runtime_error("model meta: write failed");
}

Model load_model(const std::string& path) {
    std::ifstream f(path + ".meta");
    if (!f) throw std::runtime_error("model meta: cannot open " + path + ".meta");
    json meta;
    try {
        f >> meta;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("model meta: ") + e.what());
    }
    ModelConfig c;
    const json& jc = meta.at("config");
    c.levels = jc.at("levels").get<int>();
    c.branch_dim = jc.at("branch_dim").get<int>();
    c.heads = jc.at("heads").get<int>();
    c.encoder_dim = jc.at("encoder_dim").get<int>();
    c.gcn_hidden = jc.at("gcn_hidden").get<int>();
    c.tokens = jc.at("tokens").get<int>();
    c.conv_kernel = jc.at("conv_kernel").get<int>();
    c.conv_stride = jc.at("conv_stride").get<int>();
    c.joint_dim = jc.at("joint_dim").get<int>();
    c.text_dim = jc.at("text_dim").get<int>();
    c.classifier_hidden = jc.at("classifier_hidden").get<int>();
    c.num_classes = jc.at("num_classes").get<int>();
    std::vector<std::string> classes = meta.at("classes").get<std::vector<std::string>>();
    return Model(c, load_checkpoint(path), std::move(classes));
}

}  // namespace oazr
