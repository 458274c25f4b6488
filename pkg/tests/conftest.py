import numpy as np
import pytest

from hrbench import tensor as T


def finite_difference_check(build_loss, tensors, eps=1e-5, rtol=1e-4, atol=1e-6):
    """Compare reverse-mode gradients against central finite differences.

    `build_loss` must rebuild the scalar loss from the current contents of
    `tensors`. A component passes when its relative error is below `rtol`
    or, where the gradient is near zero, its absolute error is below `atol`.
    """
    for t in tensors:
        t.zero_grad()
    T.reset_graph()
    loss = build_loss()
    T.backward(loss)
    grads = []
    for t in tensors:
        assert t.grad is not None, f"no gradient reached {t.name or t.shape}"
        grads.append(t.grad.copy())

    for t, g in zip(tensors, grads):
        flat = t.data.reshape(-1)
        fd = np.zeros(flat.size)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            with T.no_grad():
                up = build_loss().item()
            flat[i] = orig - eps
            with T.no_grad():
                down = build_loss().item()
            flat[i] = orig
            fd[i] = (up - down) / (2.0 * eps)
        fd = fd.reshape(t.data.shape)
        err = np.abs(g - fd)
        denom = np.maximum(np.abs(g), np.abs(fd))
        ok = (err <= atol) | (err <= rtol * denom)
        worst = np.unravel_index(np.argmax(err - rtol * denom), err.shape)
        assert ok.all(), (
            f"gradient mismatch for {t.name or t.shape} at {worst}: "
            f"auto={g[worst]:.8g} fd={fd[worst]:.8g}"
        )


@pytest.fixture
def fd_check():
    return finite_difference_check
