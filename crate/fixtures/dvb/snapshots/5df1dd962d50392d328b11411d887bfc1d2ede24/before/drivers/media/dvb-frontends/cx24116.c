/*
 * cx24116.c - DVB-S frontend driver (test fixture)
 */
#include <linux/kernel.h>
#include <linux/module.h>
#include <linux/string.h>
#include <linux/slab.h>
#include <media/dvb_frontend.h>

static int debug;

struct cx24116_state_priv {
	struct i2c_adapter *i2c;
	u8 dsec_args[8];
};

static int cx24116_read_status(struct dvb_frontend *fe, enum fe_status *status)
{
	struct cx24116_state *state = fe->demodulator_priv;
	int sync = cx24116_readreg(state, 0x24);

	*status = 0;
	if (sync & 0x08)
		*status |= FE_HAS_LOCK;
	return 0;
}

static int cx24116_send_diseqc_msg(struct dvb_frontend *fe,
				    struct dvb_diseqc_master_cmd *d)
{
	struct cx24116_state *state = fe->demodulator_priv;
	int i, ret = 0, status = 0;

	if (debug)
		printk(KERN_INFO "cx24116: %s(", __func__);

	memcpy(state->dsec_args, d->msg, d->msg_len);

	state->dsec_len = d->msg_len;
	ret = cx24116_cmd_execute(fe, &state->dsec_cmd);
	if (ret != 0)
		return ret;

	return 0;
}
