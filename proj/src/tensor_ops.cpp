#include "spdnet/tensor_ops.hpp"

namespace spdnet {

torch::Tensor images_to_tensor(const std::vector<Image>& images) {
    if (images.empty()) throw InvalidArgument("images_to_tensor: empty batch");
    const auto rows = images.front().rows();
    const auto cols = images.front().cols();
    auto t = torch::empty({static_cast<std::int64_t>(images.size()), 1, rows, cols}, torch::kFloat32);
    auto* dst = t.data_ptr<float>();
    for (const auto& im : images) {
        if (im.rows() != rows || im.cols() != cols) throw ShapeMismatch("images_to_tensor: ragged batch");
        dst = std::copy(im.pixels.data.begin(), im.pixels.data.end(), dst);
    }
    return t;
}

torch::Tensor labels_to_tensor(const std::vector<LabelMap>& labels) {
    if (labels.empty()) throw InvalidArgument("labels_to_tensor: empty batch");
    const auto rows = labels.front().rows();
    const auto cols = labels.front().cols();
    auto t = torch::empty({static_cast<std::int64_t>(labels.size()), rows, cols}, torch::kInt64);
    auto* dst = t.data_ptr<std::int64_t>();
    for (const auto& lb : labels) {
        if (lb.rows() != rows || lb.cols() != cols) throw ShapeMismatch("labels_to_tensor: ragged batch");
        for (auto v : lb.labels.data) *dst++ = v;
    }
    return t;
}

torch::Tensor one_hot_classes(const torch::Tensor& labels, std::int64_t num_classes) {
    return torch::one_hot(labels, num_classes).permute({0, 3, 1, 2}).to(torch::kFloat32).contiguous();
}

LabelMap argmax_labels(const torch::Tensor& probs, const Spacing& spacing) {
    auto p = probs.dim() == 4 ? probs[0] : probs;
    const auto classes = p.size(0);
    auto idx = p.argmax(0).to(torch::kUInt8).contiguous();
    LabelMap out{Grid<std::uint8_t>(idx.size(0), idx.size(1)), static_cast<int>(classes), spacing};
    std::copy_n(idx.data_ptr<std::uint8_t>(), out.labels.size(), out.labels.data.begin());
    return out;
}

Grid<float> tensor_to_grid(const torch::Tensor& t) {
    auto x = t.detach().to(torch::kFloat32).contiguous();
    while (x.dim() > 2) x = x[0];
    Grid<float> g(x.size(0), x.size(1));
    std::copy_n(x.data_ptr<float>(), g.size(), g.data.begin());
    return g;
}

}  // namespace spdnet
