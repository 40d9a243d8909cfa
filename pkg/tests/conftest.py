"""Shared fixtures: the golden function pairs used across the suite and
small independent oracles (naive dominator / control-dependence / reference
evaluation) that the implementation is checked against.
"""

import pytest

# A loop written with `for` and the same loop written with `while`: every
# value in each corresponds to one value in the other.
LOOP_FOR_SRC = """
void f(char *str, size_t len) {
  for (size_t i = 0; i < len; i++)
    write(1, writable(str + i), 1);
}
"""

LOOP_WHILE_SRC = """
void g(char *ptr, size_t size) {
  size_t i;
  i = 0;
  while (i < size) {
    write(1, writable(ptr + i), 1);
    i++;
  }
}
"""

# A retrying write loop and a subtly wrong prediction of it: the prediction
# advances the offset by the full length instead of by the amount written,
# so only the first pass through the loop behaves identically.
WRITE_RETRY_SRC = """
int write_response(int fd, char *response, int len) {
  int retval, byteswritten = 0;
  while (byteswritten < len) {
    retval = write(fd, response + byteswritten, len - byteswritten);
    if (retval <= 0) {
      return 0;
    }
    byteswritten += retval;
  }
  return 1;
}
"""

WRITE_RETRY_PREDICTION_SRC = """
int write_response(int fd, char *buf, int len) {
    int i;
    for (i = 0; i < len; i += len) {
        if ((i = write(fd, buf + i, len - i)) <= 0)
            return 0;
    }
    return 1;
}
"""

# A linked-list maximum search and a prediction that collapses the current
# and best values into a single variable: memory management and iteration
# align, the comparison does not.
LIST_MAX_REF_SRC = """
int best_match(struct item *list) {
    int best_status = 0;
    struct item *node = list;
    while (node) {
        wchar_t *text = gettext_to_wchar(node->label);
        int this_status = match_node(text);
        free(text);
        if (this_status > best_status)
            best_status = this_status;
        node = node->next;
    }
    return best_status;
}
"""

LIST_MAX_PRED_SRC = """
int best_match(struct item *walk_list) {
    int match = 0;
    struct item *walk = walk_list;
    while (walk) {
        wchar_t *text = gettext_to_wchar(walk->label);
        match = match_node(text);
        free(text);
        if (match > match)
            match = match;
        walk = walk->next;
    }
    return match;
}
"""


@pytest.fixture(scope="session")
def loop_pair():
    from eqalign.analyze import analyze_source
    return analyze_source(LOOP_FOR_SRC), analyze_source(LOOP_WHILE_SRC)


@pytest.fixture(scope="session")
def write_retry_pair():
    from eqalign.analyze import analyze_source
    return (analyze_source(WRITE_RETRY_SRC),
            analyze_source(WRITE_RETRY_PREDICTION_SRC))


####################
# Test-side oracles
####################


def naive_dominators(cfg):
    """Set-based dominator fixpoint, independent of the library's algorithm."""
    blocks = cfg.blocks
    dom = {b: set(blocks) for b in blocks}
    dom[cfg.entry] = {cfg.entry}
    changed = True
    while changed:
        changed = False
        for block in blocks:
            if block is cfg.entry:
                continue
            preds = [p for p in block.preds if p in dom]
            new = set(blocks)
            for p in preds:
                new &= dom[p]
            new |= {block}
            if new != dom[block]:
                dom[block] = new
                changed = True
    return dom


def naive_postdominators(cfg):
    """Set-based postdominators over a virtual exit ('X'). Returns
    {block: set of postdominating blocks} (the virtual exit excluded)."""
    blocks = list(cfg.blocks)
    exits = [b for b in blocks if not b.succs]
    succs = {b: [s for s, _ in b.succs] for b in blocks}
    pdom = {b: set(blocks) for b in blocks}
    for b in exits:
        pdom[b] = {b}
    changed = True
    while changed:
        changed = False
        for block in blocks:
            if block in exits:
                continue
            new = set(blocks)
            for s in succs[block]:
                new &= pdom[s]
            new |= {block}
            if new != pdom[block]:
                pdom[block] = new
                changed = True
    return pdom


def naive_control_dependence(cfg):
    """Direct-from-definition control dependence: A depends on branch B with
    label L when A postdominates B's L successor but does not strictly
    postdominate B. Only defined for graphs whose loops all reach an exit."""
    pdom = naive_postdominators(cfg)
    deps = {b: set() for b in cfg.blocks}
    for controller in cfg.blocks:
        for succ, label in controller.succs:
            if label is None:
                continue
            for a in cfg.blocks:
                if a is controller:
                    continue
                strictly_postdominates_controller = a in pdom[controller]
                if a in pdom[succ] and not strictly_postdominates_controller:
                    deps[a].add((controller, label))
    return deps
