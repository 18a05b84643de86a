#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "sdfgi/scene.hpp"

namespace sdfgi {

// Median-split BVH over primitive bounds with a nearest-distance traversal.
// Benchmark baseline only; the pipeline's acceleration structure is the
// cluster list.
class DistanceBvh {
public:
    explicit DistanceBvh(const std::vector<SdfPrimitive>& prims) : prims_(&prims) {
        order_.resize(prims.size());
        std::iota(order_.begin(), order_.end(), 0);
        boxes_.reserve(prims.size());
        for (const auto& p : prims) boxes_.push_back(primitiveAabb(p));
        if (!prims.empty()) root_ = build(0, static_cast<int>(prims.size()));
    }

    double query(const Vec3& p, double initD = kInf, TraceStats* stats = nullptr) const {
        double d = initD;
        if (stats) ++stats->sdfQueries;
        if (root_ >= 0) queryNode(root_, p, d, stats);
        return d;
    }

private:
    struct Node {
        Aabb box;
        int left = -1, right = -1;
        int first = 0, count = 0;  // leaf when count > 0
    };

    int build(int first, int count) {
        Node node;
        for (int i = 0; i < count; ++i) node.box.expand(boxes_[order_[first + i]]);
        int idx = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        if (count <= 2) {
            nodes_[idx].first = first;
            nodes_[idx].count = count;
            return idx;
        }
        Vec3 ext = node.box.extent();
        int axis = ext.x > ext.y ? (ext.x > ext.z ? 0 : 2) : (ext.y > ext.z ? 1 : 2);
        std::nth_element(order_.begin() + first, order_.begin() + first + count / 2,
                         order_.begin() + first + count, [&](int a, int b) {
                             return boxes_[a].center()[axis] < boxes_[b].center()[axis];
                         });
        int mid = count / 2;
        int left = build(first, mid);
        int right = build(first + mid, count - mid);
        nodes_[idx].left = left;
        nodes_[idx].right = right;
        return idx;
    }

    void queryNode(int idx, const Vec3& p, double& d, TraceStats* stats) const {
        const Node& node = nodes_[idx];
        if (node.count > 0) {
            for (int i = 0; i < node.count; ++i) {
                if (stats) ++stats->primitiveEvals;
                d = std::min(d, evalPrimitive((*prims_)[order_[node.first + i]], p));
            }
            return;
        }
        double dl = nodes_[node.left].box.distance(p);
        double dr = nodes_[node.right].box.distance(p);
        int nearChild = dl <= dr ? node.left : node.right;
        int farChild = dl <= dr ? node.right : node.left;
        double nearDist = std::min(dl, dr), farDist = std::max(dl, dr);
        if (nearDist < d) {
            if (stats) ++stats->clustersVisited;
            queryNode(nearChild, p, d, stats);
        } else if (stats) {
            ++stats->clustersSkipped;
        }
        if (farDist < d) {
            if (stats) ++stats->clustersVisited;
            queryNode(farChild, p, d, stats);
        } else if (stats) {
            ++stats->clustersSkipped;
        }
    }

    const std::vector<SdfPrimitive>* prims_;
    std::vector<int> order_;
    std::vector<Aabb> boxes_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace sdfgi
