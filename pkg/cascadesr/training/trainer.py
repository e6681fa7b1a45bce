import os
import logging
from inspect import Parameter, signature
import torch
from torch.nn.utils import clip_grad_value_, clip_grad_norm_

from cascadesr.errors import ParameterError
from cascadesr.data import get_dataset_cls
from cascadesr.loss import get_loss_cls
from cascadesr.model import get_model_cls
from cascadesr.training import register_trainer, get_trainer_cls, get_callback_cls
from cascadesr.training.callbacks import (
    Checkpoint, CallbackList, LogCallback, LRStatCallback, AugmentEpochSetter,
)
from cascadesr.training.utils import get_optimizer, get_lr_scheduler, save_args
from cascadesr.utils import bool_flag


logger = logging.getLogger()


def forward_model(model, batch):
    """Call model.forward with the batch entries named in its signature."""
    params = signature(model.forward).parameters
    feed = {k: batch[k] for k in params if k in batch}
    missing = [k for k, p in params.items()
               if k not in batch and p.kind is Parameter.POSITIONAL_OR_KEYWORD and p.default is p.empty]
    if missing:
        raise ParameterError(f'{type(model).__name__}.forward needs {missing}, batch has {sorted(batch)}')
    return model(**feed)


@register_trainer('basictrainer')
class BasicTrainer:
    """
    Epoch loop over a patch dataset: optimizer and lr scheduler from their string specs,
    the loss from the registry, user callbacks from --callbacks. The trainer adds the
    epoch setter for seeded augmentation, the lr and log callbacks, and a checkpoint
    that lets an interrupted run resume where it stopped.
    """
    def __init__(self, args, model, train_dataset=None, callbacks: list = None):
        if train_dataset is None or len(train_dataset) == 0:
            raise ParameterError('empty training set')
        self.args = args
        self.model = model
        self.train_dataset = train_dataset
        self.callbacks = list(callbacks or [])
        os.makedirs(args.exp_dir, exist_ok=True)

        self.optimizer = get_optimizer(model.parameters(), args.optimizer)
        self.lr_scheduler = get_lr_scheduler(self.optimizer, args.lr_scheduler)
        self.loss = get_loss_cls(args.loss).build(args, model, train_dataset)
        self.train_loader = self._build_dataloader(train_dataset)
        self._build_callbacks()

    def _build_dataloader(self, dataset):
        # the loader's own generator keeps shuffling independent of the global RNG
        generator = torch.Generator()
        generator.manual_seed(self.args.seed)
        return torch.utils.data.DataLoader(dataset, batch_size=self.args.batch_size, shuffle=self.args.shuffle,
                                           num_workers=self.args.num_workers, generator=generator)

    def _build_callbacks(self):
        for name in filter(None, self.args.callbacks.split(',')):
            cb_cls = get_callback_cls(name)
            self.callbacks.append(cb_cls.build(self.args, self))
            logger.info(f'Add callback {cb_cls.__name__}')
        internal = []
        if hasattr(self.train_dataset, 'set_epoch'):
            internal.append(AugmentEpochSetter(self.train_dataset))
        internal.append(LRStatCallback(optimizer=self.optimizer, lr_scheduler=self.lr_scheduler))
        # logging reads the status of everything before it
        internal.append(LogCallback(self.callbacks + internal,
                                    log_every_n_batches=self.args.log_every_n_batches,
                                    log_every_n_epochs=self.args.log_every_n_epochs))
        self.ckpt = Checkpoint(self.args.exp_dir, self.callbacks + internal, optimizer=self.optimizer,
                               lr_scheduler=self.lr_scheduler, last_to_keep=self.args.last_to_keep)
        self.callback_list = CallbackList(self.callbacks + internal + [self.ckpt])
        for c in self.callback_list:
            c.set_model(self.model)

    def forward_model(self, model, batch):
        return forward_model(model, batch)

    def train(self):
        save_args(self.args, os.path.join(self.args.exp_dir, 'kwargs.json'))
        cb_list = self.callback_list
        last = self.ckpt.restore()
        if last is None:
            logger.info('Begin to train')
            cb_list.on_train_begin({})
            first = 0
        else:
            first = last + 1
            logger.info(f'continue to train from epoch {first}, total epochs {self.args.epochs}')
        batch_counter = self.ckpt.batch_counter
        for e in range(first, self.args.epochs):
            logger.debug(f'Epoch {e + 1}/{self.args.epochs}')
            cb_list.on_train_epoch_begin(e)
            self.model.train()
            for batch in self.train_loader:
                cb_list.on_train_batch_begin({})
                out = self.train_batch(batch, batch_counter)
                cb_list.on_train_batch_end(batch, out)
                batch_counter += 1
            if self.lr_scheduler is not None:  # epoch step, before the checkpoint records it
                self.lr_scheduler.step()
            cb_list.on_train_epoch_end(e, {})
        cb_list.on_train_end({})
        return self.model

    def train_batch(self, batch, batch_counter=None):
        """One optimizer step; returns the model outputs merged with the loss outputs."""
        self.optimizer.zero_grad()
        out = self.forward_model(self.model, batch)
        out.update(self.loss(batch, out))
        if not torch.isfinite(out['loss']):
            logger.warning(f'non-finite loss at batch {batch_counter}, batch skipped')
            return out
        out['loss'].backward()
        if self.args.grad_clip:
            clip_grad_value_(self.model.parameters(), self.args.grad_clip)
        if self.args.grad_norm:
            clip_grad_norm_(self.model.parameters(), self.args.grad_norm)
        self.optimizer.step()
        if self.lr_scheduler is not None:
            self.lr_scheduler.step_batch(batch_counter)
        return out

    @classmethod
    def add_optimizer_args(cls, parser, arglist=None):
        parser.add_argument('--optimizer', type=str, default='adam,lr=1e-4,beta1=0.9,beta2=0.999,eps=1e-8',
            help='optim,lr=0.001,beta1=0.9....'
        )
        parser.add_argument('--grad-clip', type=float, default=None)
        parser.add_argument('--grad-norm', type=float, default=None)

    @classmethod
    def add_lr_scheduler_args(cls, parser, arglist=None):
        parser.add_argument('--lr-scheduler', type=str, default='steplr,step_size=100,gamma=0.5',
            help='The format is the same as optimizer, or none'
        )

    @classmethod
    def add_loss_args(cls, parser, arglist=None):
        parser.add_argument('--loss', type=str, default='mse')

    @classmethod
    def add_dataloader_args(cls, parser, arglist=None):
        parser.add_argument('--batch-size', type=int, metavar='N', default=8)
        parser.add_argument('--shuffle', type=bool_flag, default=True, help='Shuffle training data')
        parser.add_argument('--num-workers', type=int, default=0)

    @classmethod
    def add_training_args(cls, parser, arglist=None):
        parser.add_argument('--exp-dir', type=str, required=True, help='Experiment dir')
        parser.add_argument('-e', '--epochs', type=int, default=10)
        parser.add_argument('--last-to-keep', type=int, default=1)
        parser.add_argument('--log-every-n-batches', type=int, default=0)
        parser.add_argument('--log-every-n-epochs', type=int, default=1)
        parser.add_argument('--trainer', type=str, default='basictrainer')

    @classmethod
    def add_callbacks_args(cls, parser, arglist=None):
        parser.add_argument('--callbacks', type=str, default='loss_curve',
                            help='callback names such as loss_curve, the order matters')

    @classmethod
    def add_args(cls, parser, arglist=None):
        cls.add_dataloader_args(parser, arglist)
        cls.add_loss_args(parser, arglist)
        cls.add_lr_scheduler_args(parser, arglist)
        cls.add_optimizer_args(parser, arglist)
        cls.add_training_args(parser, arglist)
        cls.add_callbacks_args(parser, arglist)

    @classmethod
    def build(cls, args, model, train_data, callbacks: list = None):
        return cls(args, model, train_dataset=train_data, callbacks=callbacks)


def add_train_args(parser, arglist=None):
    """All options of train_erbpn: dataset, model and trainer."""
    get_dataset_cls('sr_patches').add_args(parser, arglist)
    get_model_cls('erbpn').add_args(parser, arglist)
    BasicTrainer.add_args(parser, arglist)


def train_erbpn(pairs, args, model=None, callbacks=None):
    """Train the network on (LR, HR) patch pairs; returns the trained model."""
    if not pairs:
        raise ParameterError('empty training set')
    dataset = get_dataset_cls('sr_patches').build(args, pairs)
    if model is None:
        model = get_model_cls('erbpn').build(args)
    if model.scale != args.scale:
        raise ParameterError(f'model scale {model.scale} differs from training scale {args.scale}')
    model.metadata['training_mode'] = args.mode
    logger.info(f'Training ERBPN x{model.scale} ({model.num_parameters()} parameters) on '
                f'{len(dataset)} pairs, {args.epochs} epochs, batch size {args.batch_size}')
    trainer = get_trainer_cls(args.trainer).build(args, model, dataset, callbacks=callbacks)
    return trainer.train()
