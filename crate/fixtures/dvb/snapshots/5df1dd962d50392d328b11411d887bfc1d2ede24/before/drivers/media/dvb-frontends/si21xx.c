/*
 * si21xx.c - DVB-S frontend driver (test fixture)
 */
#include <linux/kernel.h>
#include <linux/module.h>
#include <linux/string.h>
#include <linux/slab.h>
#include <media/dvb_frontend.h>

static int debug;

struct si21xx_state_priv {
	struct i2c_adapter *i2c;
	u8 lnb_msg[8];
};

static int si21xx_read_status(struct dvb_frontend *fe, enum fe_status *status)
{
	struct si21xx_state *state = fe->demodulator_priv;
	int sync = si21xx_readreg(state, 0x24);

	*status = 0;
	if (sync & 0x08)
		*status |= FE_HAS_LOCK;
	return 0;
}

static int si21xx_send_diseqc_msg(struct dvb_frontend *fe,
				    struct dvb_diseqc_master_cmd *m)
{
	struct si21xx_state *state = fe->demodulator_priv;
	int i, ret = 0, status = 0;

	dprintk("%s\n", __func__);
	status = si21_readreg(state, LNB_CTRL_STATUS_REG);

	memcpy(state->lnb_msg, m->msg, m->msg_len);

	for (i = 0; i < m->msg_len; i++)
		status |= si21_writereg(state, LNB_FIFO_REGS_0 + i, state->lnb_msg[i]);

	return status;
}
