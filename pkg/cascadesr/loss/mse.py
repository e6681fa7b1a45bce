from cascadesr.errors import ParameterError
from cascadesr.loss import register_loss, Loss


def mse_loss(pred, target):
    """
    Sum of squared errors over pixels, averaged over the N samples of the batch.
    Returns (loss, gradient w.r.t. pred).
    """
    if pred.shape != target.shape:
        raise ParameterError(f'pred {tuple(pred.shape)} and target {tuple(target.shape)} differ in shape')
    if pred.dim() == 0 or pred.size(0) == 0:
        raise ParameterError('empty batch')
    n = pred.size(0)
    diff = pred - target
    loss = (diff * diff).sum() / n
    return loss, 2.0 * diff.detach() / n


@register_loss('mse')
class MSELoss(Loss):
    def forward(self, batch, out):
        sr = out['sr']
        hr = batch['hr'].to(sr.dtype)
        loss, _ = mse_loss(sr, hr)
        return {
            'loss': loss,
            'sample_size': sr.size(0),
        }
