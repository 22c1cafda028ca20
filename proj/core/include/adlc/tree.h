#ifndef ADLC_TREE_H_
#define ADLC_TREE_H_

#include <memory>
#include <string>
#include <string_view>

#include "adlc/expr.h"

namespace adlc {

// Binary tree with real node values; an empty tree is a null pointer.
struct TreeNode;
using Tree = std::shared_ptr<const TreeNode>;

struct TreeNode {
  double value;
  Tree left;
  Tree right;
};

Tree leaf();
Tree node(double value, Tree left, Tree right);

// `(leaf)` | `(node FLOAT tree tree)`. Throws ParseError.
Tree parse_tree(std::string_view text);
std::string print_tree(const Tree& t);
std::size_t tree_size(const Tree& t);  // number of nodes

// The tree as an object-language value: leaf = (inl ()),
// node = (inr (pair value (pair left right))).
ExprPtr tree_literal(const Tree& t);

// (lam x (letrec fold (lam t (case t _ x n
//            (let l (app fold left) (let r (app fold right)
//              (app (app (app body l) r) value)))))
//          (app fold TREE)))
// `body` has the form (lam l (lam r (lam v e))). The result is the
// unstaged counterpart of stage_tree.
ExprPtr tree_fold_program(const ExprPtr& body, const Tree& t);

}  // namespace adlc

#endif  // ADLC_TREE_H_
