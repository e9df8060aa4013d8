/*
 * mb86a16.c - DVB-S frontend driver (test fixture)
 */
#include <linux/kernel.h>
#include <linux/module.h>
#include <linux/string.h>
#include <linux/slab.h>
#include <media/dvb_frontend.h>

static int debug;

struct mb86a16_state_priv {
	struct i2c_adapter *i2c;
	u8 dsec_msg[8];
};

static int mb86a16_read_status(struct dvb_frontend *fe, enum fe_status *status)
{
	struct mb86a16_state *state = fe->demodulator_priv;
	int sync = mb86a16_readreg(state, 0x24);

	*status = 0;
	if (sync & 0x08)
		*status |= FE_HAS_LOCK;
	return 0;
}

static int mb86a16_send_diseqc_msg(struct dvb_frontend *fe,
				    struct dvb_diseqc_master_cmd *cmd)
{
	struct mb86a16_state *state = fe->demodulator_priv;
	int i, ret = 0, status = 0;

	dprintk(verbose, MB86A16_DEBUG, 1, "Entering");

	memcpy(state->dsec_msg, cmd->msg, cmd->msg_len);

	if (mb86a16_write(state, MB86A16_DCC1, MB86A16_DCC1_DISTA) < 0)
		goto err;

	return 0;

err:
	dprintk(verbose, MB86A16_ERROR, 1, "I2C transfer error");
	return -EREMOTEIO;
}
